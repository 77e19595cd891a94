import re

from setuptools import setup

short_description = "Ambisonics upscaling from first to third order with cascaded score-based diffusion"
version = ""
with open("pydiffau/__init__.py") as f:
    version = re.search(r'^__version__\s*=\s*[\'"]([^\'"]*)[\'"]', f.read(), re.MULTILINE).group(1)

if not version:
    raise RuntimeError("version is not set")

readme = ""
with open("README.md") as f:
    readme = f.read() or short_description

requirements = []
with open("requirements.txt") as f:
    requirements = f.read().splitlines()

extras_require = {
    "docs": [
        "sphinx>=4.0.2",
        "furo==2021.11.23",
        "sphinx_copybutton>=0.4.0",
    ],
    "tests": [
        "pytest>=7.0",
        "hypothesis>=6.0",
    ],
}

classifiers = [
    "License :: OSI Approved :: MIT License",
    "Programming Language :: Python :: 3.8",
    "Programming Language :: Python :: 3.9",
    "Programming Language :: Python :: 3.10",
    "Programming Language :: Python :: 3.11",
    "Operating System :: OS Independent",
    "Topic :: Multimedia :: Sound/Audio :: Analysis",
    "Topic :: Scientific/Engineering :: Artificial Intelligence",
    "Development Status :: 3 - Alpha",
]

packages = ["pydiffau", "pydiffau.dataclass", "pydiffau.threads"]

setup(
    name="pydiffau",
    author="pydiffau developers",
    version=version,
    packages=packages,
    include_package_data=True,
    license="MIT",
    description=short_description,
    long_description=readme,
    long_description_content_type="text/markdown",
    install_requires=requirements,
    extras_require=extras_require,
    entry_points={"console_scripts": ["pydiffau=pydiffau.__main__:main"]},
    keywords="ambisonics, spatial audio, diffusion, score-based generative model",
    python_requires=">=3.8.0",
    classifiers=classifiers,
)
