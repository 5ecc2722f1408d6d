from setuptools import setup, find_packages

setup(
    name="ne_moea",
    version="0.1.0",
    description="A non-elitist multi-objective evolutionary algorithm with an unbounded archive, benchmarked against NSGA-II, SMS-EMOA and NSGA-III on knapsack and NK problems.",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    install_requires=open("requirements.txt").read().splitlines(),
    extras_require={"test": ["pytest==7.4.3"]},
    packages=find_packages(exclude=["tests"]),
    package_data={"ne_moea": ["presets/*.yaml"]},
    python_requires=">=3.10",
    entry_points={
        "console_scripts": [
            "ne_moea = ne_moea.main:main"
        ]
    }
)
