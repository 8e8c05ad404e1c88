"""
Setup script for rotlab
"""

from setuptools import setup, find_packages
from pathlib import Path

# Читаем README
readme_file = Path(__file__).parent / "README.md"
long_description = readme_file.read_text(encoding='utf-8') if readme_file.exists() else ""

setup(
    name="rotlab",
    version="1.0.0",
    description="Лаборатория поворотов: дискриминативные и генеративные модели на повернутых цифрах",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="rotlab",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"rotlab": ["presets/*.conf"]},
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "Pillow>=9.1",
        "argcomplete>=2.0.0",
    ],
    extras_require={
        "test": ["pytest>=7.0"],
    },
    entry_points={
        "console_scripts": [
            "rotlab=rotlab.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
