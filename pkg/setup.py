import importlib.util
import os.path

from setuptools import find_packages, setup

SRC_DIR = "src"
SPIKEGAT_PKG_DIR = os.path.join(SRC_DIR, "spikegat")

# Load the module version
spec = importlib.util.spec_from_file_location("version", os.path.join(SPIKEGAT_PKG_DIR, "version.py"))
version = importlib.util.module_from_spec(spec)
spec.loader.exec_module(version)

install_requires = [
    "numpy>=1.23",
    "scipy>=1.9",
]

extras_require = {
    "cli": ["PyYAML>=3.10"],
}

with open("README.rst", encoding="utf-8") as f:
    readme = f.read()

with open("changelog.rst", encoding="utf-8") as f:
    changelog = f.read()

setup(
    name="spikegat",
    version=version.VERSION_STRING,
    description="Spiking graph attention networks with sparse, multiplication-free attention",
    long_description=readme + "\n\n" + changelog,
    long_description_content_type="text/x-rst",
    license="Apache-2.0",
    keywords=" ".join(
        [
            "python",
            "graph",
            "attention",
            "spiking",
            "neural-network",
            "integrate-and-fire",
            "node-classification",
            "robustness",
        ]
    ),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Developers",
        "License :: OSI Approved :: Apache Software License",
        "Natural Language :: English",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3.13",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Topic :: Software Development :: Libraries",
    ],
    package_dir={"": SRC_DIR},
    packages=find_packages(SRC_DIR),
    include_package_data=True,
    install_requires=install_requires,
    extras_require=extras_require,
    entry_points={
        "console_scripts": [
            "spikegat = spikegat.cli:main [cli]",
        ]
    },
    python_requires=">=3.10",
    zip_safe=False,
)
