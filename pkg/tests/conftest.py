import math

import numpy as np
import pytest

from metastab.expr import parse_potential
from metastab.landscape import Box, LandscapeGraph, find_critical_points, saddle_graph
from metastab.measures import GibbsSpec


@pytest.fixture(scope="session")
def double_well():
    p = parse_potential("(x1^2 - 1)^2", 1, "double-well")
    box = Box.cube(-2.5, 2.5, 1)
    cps = find_critical_points(p, box)
    graph = saddle_graph(p, cps, box, 513)
    return p, box, cps, graph


@pytest.fixture(scope="session")
def model_2d():
    p = parse_potential("(x1^2 - 1)^2 + 2*x2^2", 2, "double-well-2d")
    box = Box.cube(-3.0, 3.0, 2)
    cps = find_critical_points(p, box)
    graph = saddle_graph(p, cps, box, 129)
    return p, box, cps, graph


@pytest.fixture(scope="session")
def tilted_well():
    p = parse_potential("(x1^2 - 1)^2 + 0.1*(x1 + 1)", 1, "tilted")
    box = Box.cube(-2.5, 2.5, 1)
    cps = find_critical_points(p, box)
    graph = saddle_graph(p, cps, box, 513)
    return p, box, cps, graph


@pytest.fixture(scope="session")
def gaussian_spec():
    p = parse_potential("x1^2/2", 1, "gaussian")
    box = Box.cube(-8.0, 8.0, 1)
    cps = find_critical_points(p, box)
    graph = LandscapeGraph(minima=cps, saddles=[], edges={},
                           delta_gap=math.inf)
    return GibbsSpec(p, 1.0, box, graph)


def spec_for(fixture, eps):
    p, box, cps, graph = fixture
    return GibbsSpec(p, eps, box, graph)
