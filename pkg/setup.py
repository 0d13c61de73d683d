from setuptools import find_packages, setup

setup(
    name="hypocoax",
    version="1.0.0",
    description="Hypocoercivity certification and decay analysis for partially dissipative hyperbolic systems",
    package_dir={"": "src"},
    packages=find_packages("src"),
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "pandas",
        "scipy",
        "joblib",
        "pydantic>=2.4",
        "python-dotenv",
        "pyarrow",
    ],
    extras_require={
        "api": ["fastapi", "uvicorn[standard]", "python-multipart"],
        "test": ["pytest", "httpx"],
    },
    entry_points={"console_scripts": ["hypocoax=hypocoax.cli:main"]},
)
