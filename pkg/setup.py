from setuptools import setup

setup(name = 'riskplan',
      version = '0.1.0',
      description = "Risk-aware reactive temporal logic planning under Gaussian uncertainty",
      license = 'MIT',
      keywords='temporal logic planning risk VaR CVaR timed automata reactive synthesis',
      packages = ['riskplan'],
      package_data = {'riskplan': ['data/*.json']},
      zip_safe = False,
      test_suite='nose.collector',
      tests_require=['nose'],
      entry_points = {'console_scripts': ['riskplan=riskplan.cli:main']},
      install_requires = [
              'pandas>=0.18.1',
              'numpy',
              'scipy>=1.6',
              'sympy'],
       )
