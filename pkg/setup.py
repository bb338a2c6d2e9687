from setuptools import setup, find_packages

with open("requirements.txt") as f:
    required = f.read().splitlines()

with open("README.md", "r", encoding="utf-8") as readme_file:
    long_description = readme_file.read()

setup(
    name="qivif",
    version="0.1.0",
    packages=find_packages(include=["qivif", "qivif.*"]),
    install_requires=required,
    extras_require={"dev": ["pytest>=7.4", "hypothesis>=6.90"]},
    entry_points={
        "console_scripts": [
            "qivif=qivif.main:main_entry",
        ],
    },
    long_description=long_description,
    long_description_content_type="text/markdown",
)
