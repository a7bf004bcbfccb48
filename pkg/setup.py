from setuptools import setup, find_packages

setup(
    name='qmv',
    version='0.1.0',
    description='Lightcone mean value simulator for time-dependent nearest-neighbour lattice Hamiltonians',
    long_description=__doc__,
    packages=find_packages(exclude=['test']),
    include_package_data=True,
    zip_safe=False,
    python_requires='>=3.7',
    install_requires=[
        'numpy',
        'scipy',
        'opt_einsum',
        'pandas',
        'click',
        'Flask',
        'cachetools',
    ],
    entry_points={
          'console_scripts': [
              'qmv=qmv.cli:main',
          ],
      },
)
