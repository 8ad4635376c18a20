#!/usr/bin/env python3
"""Install epion using setuptools."""
import setuptools

with open("README.md", "r", encoding='utf8') as fh:
    LONG_DESCRIPTION = fh.read()

setuptools.setup(
    name="epion",
    version="1",
    python_requires=">=3.9",
    description="Euler-Poisson ion lab - numerical probes of the 2D "
                "Euler-Poisson ion system",
    long_description=LONG_DESCRIPTION,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    # Must match requirements.txt.
    install_requires=[
        "numpy",
        "scipy>=1.12",
        "jsonschema[format]",
        "cached-property",
    ],
    extras_require=dict(
        dev=[
            "flake8",
            "pylint",
            "pytest",
        ],
    ),
    entry_points=dict(
        console_scripts=[
            "epion = epion:run_main",
            "epion-dispersion = epion.dispersion:tabulate_main",
            "epion-resonance-verify = epion.resonance:verify_main",
            "epion-norms = epion.paley:norms_main",
            "epion-decay = epion.semigroup:decay_main",
            "epion-simulate = epion.solver:simulate_main",
        ]
    ),
)
