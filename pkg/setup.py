""" setup.py """

import setuptools

with open("README.md", "r") as fh:
    LONG_DESCRIPTION = fh.read()

setuptools.setup(
    name="fwaveorg",
    version="0.1.0",
    description="Spectral organization of atrial fibrillatory waves",
    long_description=LONG_DESCRIPTION,
    long_description_content_type="text/markdown",
    license='MIT License',
    packages=setuptools.find_packages(exclude=['tests']),
    package_data={'fwaveorg': ['config.yaml']},
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Medical Science Apps.",
    ],
    python_requires='>=3.8',
    install_requires=[
        'cached_property',
        'jsonschema>=4.0',
        'numpy',
        'pandas',
        'parse',
        'PyWavelets',
        'pyyaml',
        'scikit-learn',
        'scipy>=1.7',
        'statsmodels',
    ],
    scripts=['bin/fwaveorg']
)
