#!/usr/bin/env python

"""The setup script."""

import os

from setuptools import setup, find_packages

with open('README.rst') as readme_file:
    readme = readme_file.read()

with open('HISTORY.rst') as history_file:
    history = history_file.read()

with open(os.path.join('pysqueeze', 'VERSION')) as version_file:
    version = version_file.read().strip()


requirements = [
    'Click>=7.0',
    'jinja2>=2.11.2',
    'toml>=0.10.0',
    'numpy>=1.17',
    'scipy>=1.4',
    'pandas>=1.5'
]

setup_requirements = ['pytest-runner', ]

test_requirements = ['pytest>=3', ]

setup(
    author="Jonas Teufel",
    author_email='jonseb1998@gmail.com',
    python_requires='>=3.8',
    classifiers=[
        'Development Status :: 2 - Pre-Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    description="Prediction, simulation and analysis of QND spin squeezing of atomic clock ensembles",
    entry_points={
        'console_scripts': [
            'pysqueeze=pysqueeze.cli:cli',
        ],
    },
    install_requires=requirements,
    license="MIT license",
    long_description=readme,# + '\n\n' + history,
    include_package_data=True,
    package_data={'pysqueeze': ['VERSION', 'templates/*']},
    keywords='pysqueeze',
    name='pysqueeze',
    packages=find_packages(include=['pysqueeze', 'pysqueeze.*']),
    setup_requires=setup_requirements,
    test_suite='tests',
    tests_require=test_requirements,
    url='https://github.com/the16thpythonist/pysqueeze',
    version=version,
    zip_safe=False,
)
