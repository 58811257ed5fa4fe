from setuptools import setup

with open('README.rst', 'r') as f:
    long_description = f.read().split('\n\n-----\n\n', 1)[1].lstrip()

with open('HISTORY.rst', 'r') as f:
    long_description += '\n' + f.read()

setup(
    name='frdkit',
    version='0.3.1',
    description=(
        'Fuzzy regression discontinuity estimation with lambda-class '
        'estimators'),
    long_description=long_description,
    long_description_content_type='text/x-rst',
    license='MIT',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    keywords=(
        'regression discontinuity fuzzy rdd instrumental variables '
        'econometrics monte carlo'),
    packages=['frdkit'],
    python_requires='>=3.8',
    install_requires=[
        'click',
        'numpy',
        'pandas',
        'psutil',
        'scipy>=1.7',
    ],
    extras_require={
        'test': [
            'coveralls',
            'flake8',
            'flake8-bugbear',
            'flake8-isort',
            'pytest',
            'pytest-cov',
            'statsmodels',
        ],
    },
    entry_points={
        'console_scripts': [
            'frdkit = frdkit.cli:main',
        ],
    },
)
