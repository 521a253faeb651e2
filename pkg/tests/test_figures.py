"""Smoke tests: every figure renderer produces a readable PNG file."""

import os

import numpy as np
import pytest

from randschrod import constructor, figures, quasiperiodic as qp, spectrum, weyl, wordtree


def assert_png(path):
    assert os.path.exists(path)
    assert os.path.getsize(path) > 0
    with open(path, "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"


def test_certificate_figure(pilot_cert, tmp_path):
    assert_png(figures.certificate_figure(pilot_cert, str(tmp_path)))


def test_sections_figure(tmp_path):
    bg = qp.QPBackground.cosine(c=0.05)
    E = qp.top_energy(bg, window_half_length=100) + 0.1 - 1e-3
    att, rep = qp.invariant_sections(bg, E, grid=256)
    assert_png(figures.sections_figure(att, rep, str(tmp_path)))


def test_spectrum_figure(tmp_path):
    sup = spectrum.SiteSupport((0.0,))
    params = spectrum.MCParams(window_half_length=60, samples=1, grid_step=0.5, N=10)
    _, report = spectrum.mc_essential_spectrum(sup, params, energy_range=(-1.0, 1.0))
    assert_png(figures.spectrum_figure(report, str(tmp_path)))


def test_tree_figure(tmp_path):
    params = constructor.ConstructorParams(lam=0.1, a=1e-3)
    tree = wordtree.build_tree(params, depth=8)
    assert_png(figures.tree_figure(tree, str(tmp_path)))


def test_mfunction_figure(tmp_path):
    hl = weyl.HalfLineWindow(0, np.zeros(100))
    scan = weyl.negativity_monotonicity_scan(hl, np.linspace(2.2, 4.0, 10))
    assert_png(figures.mfunction_figure(scan, str(tmp_path)))


def test_sweep_figure(tmp_path):
    report = constructor.sweep_interval(0.1, [1e-3, 2e-3])
    assert_png(figures.sweep_figure(report, str(tmp_path)))
