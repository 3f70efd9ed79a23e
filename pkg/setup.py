import os
from setuptools import find_packages, setup

# Get the value of __version__ from the library's __init__.py file
exec(open(os.path.join('kerrvac', '__init__.py')).read())

setup(
    name='kerrvac',
    version=globals().get('__version__', '0.1.0'),
    author='kerrvac developers',
    packages=find_packages(exclude=('docs',)),
    license='MIT LICENSE',
    keywords=[
        'quantum optics', 'dynamical casimir effect', 'kerr effect',
        'analogue gravity', 'photon pairs', 'refractive index',
    ],
    python_requires='>=3.8',
    description=(
        'A CLI tool to compute the photon pairs that refractive index '
        'perturbations create out of the vacuum'
    ),
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    entry_points={
        'console_scripts': [
            'kerrvac=kerrvac.scripts.kerrvac:main',
        ],
    },
    install_requires=[
        'jinja2',
        'numpy>=1.20',
        'scipy>=1.6',
    ],
    extras_require={
        'test': ['sphinx', 'tox'],
    },
    package_data={
        'kerrvac.tests': ['fixtures/*.ini', 'fixtures/*.json'],
    },
    test_suite="kerrvac.tests",
    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'Natural Language :: English',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
        'Programming Language :: Python :: Implementation :: CPython',
        'Topic :: Scientific/Engineering :: Physics',
    ],
)
