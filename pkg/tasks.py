from __future__ import print_function, unicode_literals

import os

from invoke import task


@task
def docs(ctx, warn=False):
    ctx.run('python -m sphinx -b html docs/ docs/_build/html', warn=warn)


@task
def test(ctx, coverage=False, slow=False, warn=False):
    cmd = 'py.test'
    if coverage:
        cmd += ' --cov=rfsynth --cov-report=term-missing'
    env = dict(os.environ)
    if slow:
        env['RFSYNTH_SLOW_TESTS'] = '1'
    ctx.run(cmd, pty=True, warn=warn, env=env)


@task
def synth_example(ctx, out='class_b_pa.gds'):
    """Run the bundled Class-B PA netlist through the whole flow."""
    ctx.run(
        'python -m rfsynth synth rfsynth/data/class_b_pa.sp --out %s '
        '--report %s.json' % (out, out)
    )
