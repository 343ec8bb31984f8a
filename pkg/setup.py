import re

from setuptools import find_packages, setup

with open("commands/__init__.py", "r", encoding="utf-8") as f:
    __version__ = re.search(r'^__version__ = "([^"]+)"', f.read(), re.M).group(1)

with open("README.md", "r", encoding="utf-8") as f:
    long_description = f.read()

with open("requirements.txt", "r") as f:
    reqs = f.read().splitlines()

setup(
    name="mm-opinion-miner",
    version=__version__,

    description=("Multi-modal fine-grained opinion mining: aspect extraction "
                 "and sentiment from review text, audio and video"),
    long_description=long_description,
    long_description_content_type="text/markdown",

    license="Apache License 2.0",

    classifiers = [
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Topic :: Text Processing :: Linguistic",
        "Typing :: Typed",
    ],
    python_requires=">=3.9",
    install_requires=reqs,
    packages=find_packages(exclude=["examples", "examples.*"]),
    entry_points={
        "console_scripts": ["mm-opinion-miner=commands.cli:main"],
    },
)
