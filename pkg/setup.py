from setuptools import setup, find_packages

# Single source for the version string
version = {}
with open('vlsnull/_version.py') as fh:
    exec(fh.read(), version)

setup(name='vlsnull',
      version=version['__version__'],
      license='BSD',
      author='SLAC National Accelerator Laboratory',
      packages=find_packages(),
      install_requires=['simplejson', 'lmfit', 'numpy', 'scipy', 'pandas',
                        'ophyd', 'bluesky', 'sympy'],
      package_data={'vlsnull': ['data/*.json']},
      entry_points={'console_scripts': ['vlsnull=vlsnull.cli:main']},
      description='Vector light shift simulation and nulling analysis',
      )
