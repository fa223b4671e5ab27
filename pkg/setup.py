#!/usr/bin/env python
''' Setup script '''

from setuptools import find_packages, setup

with open('requirements.txt') as req_file:
    REQUIREMENTS = req_file.read()

with open('test-requirements.txt') as req_file:
    TEST_REQUIREMENTS = req_file.read()

setup(
    name="mof",
    author="The mof authors",
    python_requires='>=3.10',
    classifiers=[
        "Operating System :: POSIX",
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
        'License :: OSI Approved :: GNU Affero General Public License v3 or later (AGPLv3+):',  # noqa: E501
        'Topic :: Scientific/Engineering'
    ],
    description="Markovian obstacle fields and optical-flow flight simulation",
    keywords="optical-flow time-to-contact dubins monte-carlo robotics",
    long_description=
    '''Generates Markovian slat fields, evaluates and Monte Carlo checks the collision free probabilities of a quantized Dubins vehicle and simulates closed-loop unicycle flight under range/bearing and time-to-transit feedback.''',
    long_description_content_type='text/markdown',
    install_requires=REQUIREMENTS,
    tests_require=TEST_REQUIREMENTS,
    entry_points={
        'console_scripts': [
            'mof=mof.main:cli',
        ],
        'mof_gate_selectors': [
            'bearing=mof.sim:BearingSelector',
            'widest=mof.sim:WidestSelector',
        ],
    },
    packages=find_packages(exclude=['features']),
    version="0.3.0")
