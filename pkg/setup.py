from setuptools import setup

with open("requirements.txt") as f:
    requirements = [line.strip() for line in f if line.strip() and not line.startswith("pytest")]

setup(
    name="qb-eit",
    version="0.1.0",
    description="Charging simulations of quantum batteries protected by electromagnetically induced transparency",
    py_modules=["linops", "Atoms", "Batteries", "ergotropy", "Simulators", "envelope", "scenarios",
                "run_scenario", "display_results", "tools"],
    install_requires=requirements,
    extras_require={"test": ["pytest>=5.2"]},
    entry_points={"console_scripts": ["qb-eit=run_scenario:main"]},
    python_requires=">=3.8",
)
