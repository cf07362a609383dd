import pytest

from wayfind.building import load_bundled_fixture
from wayfind.navmesh import build_navmesh
from wayfind.simulation import World


@pytest.fixture(scope="session")
def spec():
    return load_bundled_fixture()


@pytest.fixture(scope="session")
def mesh(spec):
    return build_navmesh(spec)


@pytest.fixture(scope="session")
def world(spec, mesh):
    return World(spec, mesh)


def make_mini_doc(length=4200.0, width=240.0, pillar=False):
    """Single rectangular corridor on one floor, optionally with a pillar."""
    half = width / 2.0
    doc = {
        "name": "mini",
        "units": "cm",
        "floors": [
            {
                "id": 1,
                "z_cm": 0.0,
                "walkable": [
                    {
                        "id": "f1-main",
                        "kind": "main_corridor",
                        "points": [[0, -half], [length, -half], [length, half], [0, half]],
                    }
                ],
                "obstacles": (
                    [
                        {
                            "id": "f1-pillar",
                            "kind": "pillar",
                            "points": [[2000, -40], [2080, -40], [2080, 40], [2000, 40]],
                        }
                    ]
                    if pillar
                    else []
                ),
                "rooms": [
                    {"label": "1.01", "door": [100.0, -half], "side": "uneven"},
                    {"label": "1.99", "door": [length - 100.0, -half], "side": "uneven"},
                ],
                "signs": [],
            }
        ],
        "staircases": [],
        "exits": [
            {"label": "A", "floor": 1, "position": [length, 0.0], "is_main_entrance": True}
        ],
        "zones": [],
    }
    return doc


def mini_assignments():
    from wayfind.simulation import Assignment

    return (Assignment(1, "1.01", "1.99", "room", "none", "Walk to the far room."),)


@pytest.fixture()
def mini_world():
    from wayfind.building import load_building

    return World(load_building(make_mini_doc()), assignments=mini_assignments())
