""" A setuptools-based setup module. """

from os import path
from setuptools import setup, find_packages

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    name='cpcompress', # Required

    # Versions should comply with PEP 440:
    # https://www.python.org/dev/peps/pep-0440/
    version='0.1.0a1',  # Required

    # A one-line description of what this project does.
    description='Compresses network control planes into smaller networks '
                'with the same stable routing behavior',  # Optional

    # An optional longer description of the project. This is the same as
    # the README.
    long_description=long_description,  # Optional

    # The README is in Markdown.
    long_description_content_type='text/markdown',  # Optional

    # For a list of valid classifiers, see https://pypi.org/classifiers/
    classifiers=[  # Optional
        'Development Status :: 3 - Alpha',

        'Intended Audience :: Science/Research',
        'Intended Audience :: Telecommunications Industry',
        'Topic :: System :: Networking',

        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',

        'Natural Language :: English'
    ],

    # What does your project relate to?
    keywords='bgp ospf rip control plane compression verification bdd',  # Optional

    packages=find_packages(exclude=['contrib', 'docs', 'test']),  # Required

    # The report templates ship inside the package:
    package_data={  # Optional
        'cpcompress': ['templates/*.txt', 'templates/*.dot'],
    },

    # click 8.2 needs 3.10.
    python_requires='>=3.10',

    # This field lists other packages that your project depends on to run.
    # Any package you put here will be installed by pip when your project is
    # installed, so they must be valid existing projects.
    #
    # For an analysis of "install_requires" vs pip's requirements files see:
    # https://packaging.python.org/en/latest/requirements.html
    install_requires=[
        'click>=8.2',
        'Flask>=2',
        'Jinja2>=3',
        'networkx>=3',
        'pydantic>=2',
    ],  # Optional

    # List additional groups of dependencies here (e.g. development
    # dependencies).
    extras_require={  # Optional
    },

    # Provides a command called `cpcompress`:
    entry_points={  # Optional
        'console_scripts': [
            'cpcompress=cpcompress.cli:main',
        ],
    },
)
