import os
from pathlib import Path
from typing import Union, Dict, Tuple, Callable

from utils.utils_run import FancyDict, UnknownInstance, ImproperCMDArguments
from utils.utils import KNOWN_INSTANCES, INSTANCE_DIR, DATA_DIR_ENV
from network.gas_network import GasNetwork

from .load import parse_instance, apply_stress
from .belgian import belgian_instance, scratch_instance


class DataManager(object):
    """ Resolve an instance name or file into a validated network """

    @staticmethod
    def search_path() -> list:
        dirs = []
        if os.environ.get(DATA_DIR_ENV):
            dirs.append(Path(os.environ[DATA_DIR_ENV]))
        dirs.append(INSTANCE_DIR)
        return dirs


    @staticmethod
    def load_file(path: Union[str, Path]) -> Tuple[GasNetwork, Dict]:
        with open(path, 'r', encoding='utf-8') as f:
            return parse_instance(f.read())


    @staticmethod
    def loader(name: str) -> Callable:
        """ The callable building instance `name`, searched on disk first """
        for d in DataManager.search_path():
            candidate = d / f"{name}.json"
            if candidate.is_file():
                return lambda: DataManager.load_file(candidate)

        if name in ('belgian-A', 'belgian-A1', 'belgian-A2', 'belgian-A3'):
            return lambda: belgian_instance(name)
        if name in ('belgian-B1', 'belgian-B2', 'belgian-B3', 'belgian-B4'):
            return lambda: scratch_instance(name)

        raise UnknownInstance(f"Instance {name} is unknown. Known: {', '.join(KNOWN_INSTANCES)}")


    @staticmethod
    def load(config: Union[dict, FancyDict]) -> Tuple[GasNetwork, Dict]:
        """ Depends upon 'INSTANCE' or 'FILE', and 'STRESS' """
        instance, path = config.get('INSTANCE'), config.get('FILE')
        if (instance is None) == (path is None):
            raise ImproperCMDArguments("Give exactly one of an instance name or a file")

        if path is not None:
            network, metadata = DataManager.load_file(path)
        else:
            network, metadata = DataManager.loader(instance)()

        stress = config.get('STRESS', 1.0)
        if stress != 1.0:
            network = apply_stress(network, stress)

        return network, metadata
