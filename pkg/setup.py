from setuptools import setup, find_packages

setup(
    name="lattice-field",
    version="0.1",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    include_package_data=True,
    description="Distributed lattice fields with halo exchange, a matrix library and a Poisson demo",
    install_requires=open('requirements.txt').readlines(),
    python_requires=">=3.8",
    entry_points={
        "console_scripts": ["lattice-field=src.main:main"],
    },
    author="",
    author_email="",
    url=""
)
