from setuptools import setup, find_packages

setup(
    name="plc-synth",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    install_requires=[
        "click>=8.0",
        "numpy>=1.24",
        "pydantic>=2.0",
        "scipy>=1.10",
    ],
    entry_points={
        "console_scripts": [
            "plc_synth=plc_synth.__main__:main",
        ],
    },
    python_requires=">=3.10",
)
