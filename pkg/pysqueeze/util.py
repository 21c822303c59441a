import os
import json
import logging

from pathlib import Path
from typing import Any, Dict

import click
import numpy as np
from jinja2 import Template


PATH = Path(__file__).parent.absolute()
TEMPLATE_PATH = os.path.join(PATH, 'templates')


# OUTPUT UTILITIES
# ================

def get_template(name: str):
    template_path = os.path.join(TEMPLATE_PATH, name)
    with open(template_path, mode='r') as file:
        return Template(file.read())


def out(verbose: bool, *args, **kwargs):
    if verbose:
        click.secho(*args, **kwargs)


def get_version() -> str:
    version_path = os.path.join(PATH, 'VERSION')
    with open(version_path, mode='r') as file:
        return file.read().replace('\n', '').replace(' ', '')


def setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format='%(levelname)s %(name)s: %(message)s',
    )


# FILE UTILITIES
# ==============


def to_builtin(value: Any) -> Any:
    """
    Converts numpy scalars and arrays within nested dicts and lists into plain python objects, so that they can be
    written as JSON.
    """
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(path: str, data: Dict[str, Any]):
    with open(path, mode='w') as file:
        json.dump(to_builtin(data), file, indent=4, sort_keys=True)
        file.write('\n')
