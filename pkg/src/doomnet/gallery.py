"""The small example nets shipped with the package."""
from importlib import resources

from .net import PetriNet, load_net

_FILES = {
    "fig1a": "fig1a.ll_net",  # running example with its eleven-marking state graph
    "fig2": "fig2.json",      # the displayed unfolding prefix of fig1a, as a net of its own
    "fig3": "fig3.json",      # the "wreath" occurrence net
    "fig4": "fig4.json",      # occurrence net illustrating strict conflict
}
_BAD = {"fig1a": "fig1a_bad.json", "fig3": "fig3_bad.json"}


def read_text(filename: str) -> str:
    return resources.files("doomnet.data").joinpath(filename).read_text()


def load(name: str) -> PetriNet:
    return load_net(read_text(_FILES[name]))


def bad_spec_text(name: str) -> str:
    return read_text(_BAD[name])


def names() -> list[str]:
    return list(_FILES)
