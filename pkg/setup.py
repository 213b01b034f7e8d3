#! /usr/bin/env python3
# -*-python-*-

from setuptools import setup, find_packages

setup(
    name="adaframe",
    version='0.1.0',
    license="Apache 2.0",
    install_requires=[
        "jinja2",
        "numpy",
        "scipy",
    ],
    extras_require={
        'test': ['pytest'],
    },
    packages=find_packages(exclude=['tools']),
    include_package_data=True,
    package_data={
        'adaframe': ['templates/**/*.j2'],
    },
    entry_points={
        'console_scripts': ['adaframe=adaframe.cli:main'],
    },
    python_requires=">=3.9",
    platforms="platform-independent",
    description="Adaptive wavelet frames and bi-frames learned from data.",
    long_description="""This module learns filter banks with perfect
    reconstruction from training signals (tight frames, redundant and critically
    sampled bi-frames), and provides multi-level transforms, compression,
    denoising and feature extraction built on them.""",
    classifiers=[
    "Development Status :: 3 - Alpha",
    "Environment :: Console",
    "Intended Audience :: Science/Research",
    "License :: OSI Approved :: Apache Software License",
    "Operating System :: OS Independent",
    "Programming Language :: Python",
    "Programming Language :: Python :: 3.9",
    "Topic :: Scientific/Engineering :: Mathematics",
    ],
    )
