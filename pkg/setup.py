import setuptools

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setuptools.setup(
    name="gpicert",
    version="1.0.0",
    author="Siddharth Kumar",
    author_email="siddharth123sk@gmail.com",
    description="Exact rational sum-of-squares certificates for Gaussian product inequalities",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/siddharthksah/gpicert",
    packages=setuptools.find_packages(exclude=["unittests", "unittests.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=[
        "colorama>=0.4.6",
        "numpy>=1.22",
        "pyfiglet>=0.8.post1",
        "scipy>=1.8",
        "setuptools>=67.8.0",
        "termcolor>=2.3.0",
        "tqdm>=4.65.0",
        "wheel>=0.38.4",
    ],
    extras_require={
        "test": ["hypothesis>=6.80"],
    },
    entry_points={
        "console_scripts": [
            "gpicert=src.main:main",
        ],
    },
    project_urls={
        "Bug Tracker": "https://github.com/siddharthksah/gpicert/issues",
        "Documentation": "https://github.com/siddharthksah/gpicert#readme",
        "Source Code": "https://github.com/siddharthksah/gpicert",
    },
)
