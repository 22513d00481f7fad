from setuptools import setup, find_packages

setup(
    name="forecast_sim",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=["run"],
    include_package_data=True,
    description="Initial-value-problem forecaster for long-term multivariate time series",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.21.0",
        "pandas>=1.3.0",
        "scipy>=1.7.0",
        "scikit-learn>=0.24.2",
        "python-dotenv>=0.19.0",
    ],
    entry_points={"console_scripts": ["forecast-sim=run:main"]},
    classifiers=[
        "Programming Language :: Python :: 3",
    ]
)
