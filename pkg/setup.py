"""Setup script for the vtl-scuc package."""

from setuptools import setup
from pathlib import Path

# Read README for long description
readme_path = Path(__file__).parent / "README.md"
long_description = readme_path.read_text(encoding="utf-8") if readme_path.exists() else ""

# Runtime requirements only; the test tools live in extras
TEST_PACKAGES = ("pytest",)
requirements_path = Path(__file__).parent / "requirements.txt"
requirements = []
if requirements_path.exists():
    requirements = [
        line.split("#")[0].strip()
        for line in requirements_path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#") and not line.startswith(TEST_PACKAGES)
    ]

setup(
    name="vtl-scuc",
    version="1.0.0",
    description="Two-stage stochastic security-constrained unit commitment with storage and virtual transmission lines",
    long_description=long_description,
    long_description_content_type="text/markdown",
    py_modules=[
        "builder",
        "cases",
        "config",
        "exceptions",
        "gateway",
        "logging_config",
        "main",
        "metrics",
        "milp",
        "models",
        "persistence",
        "plotting",
        "reporting",
        "runner",
        "scenarios",
        "validation",
        "variants",
    ],
    packages=["solvers"],
    data_files=[("data", ["data/toy1.json"])],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Operating System :: OS Independent",
        "Typing :: Typed",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require={
        "test": [
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
            "pytest-timeout>=2.1.0",
            "pytest-xdist>=3.3.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "vtl-scuc=main:main",
        ],
    },
    keywords=[
        "unit commitment", "scuc", "stochastic programming", "milp",
        "energy storage", "virtual transmission line", "power systems",
    ],
)
