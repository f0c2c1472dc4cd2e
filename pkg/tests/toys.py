"""Small hand-built grid cases shared by the test modules."""
from __future__ import annotations

from toporel.grid import parse_case


def case_text(buses, branches, units, name="toy", base_mva=100.0) -> str:
    """buses: (id, pd[, qd]); branches: (from, to, x[, rating[, r[, b_shunt]]]); units: (bus, pmax[, for[, pmin]]).

    The first bus is the slack.  Branch indices are assigned 0, 1, ...
    """
    lines = ["[case]", "name,base_mva", f"{name},{base_mva!r}", "", "[buses]", "id,is_slack,pd,qd,vmin,vmax"]
    for k, b in enumerate(buses):
        bid, pd = b[0], b[1]
        qd = b[2] if len(b) > 2 else 0.0
        lines.append(f"{bid},{1 if k == 0 else 0},{pd!r},{qd!r},0.95,1.05")
    lines += ["", "[branches]", "index,from_bus,to_bus,r,x,b_shunt,rating"]
    for k, br in enumerate(branches):
        f, t, x = br[:3]
        rating = br[3] if len(br) > 3 else float("inf")
        r = br[4] if len(br) > 4 else 0.0
        bsh = br[5] if len(br) > 5 else 0.0
        lines.append(f"{k},{f},{t},{r!r},{x!r},{bsh!r},{'inf' if rating == float('inf') else repr(rating)}")
    lines += ["", "[units]", "bus_id,pmax,pmin,for_rate"]
    for u in units:
        bus, pmax = u[:2]
        fr = u[2] if len(u) > 2 else 0.0
        pmin = u[3] if len(u) > 3 else 0.0
        lines.append(f"{bus},{pmax!r},{pmin!r},{fr!r}")
    return "\n".join(lines) + "\n"


def make_case(buses, branches, units, **kw):
    return parse_case(case_text(buses, branches, units, **kw))


def two_bus(rating=80.0, load=60.0, gen=100.0, for_rate=0.0):
    """Generator at bus 1, load at bus 2, one line."""
    return make_case([(1, 0.0), (2, load)], [(1, 2, 0.1, rating)], [(1, gen, for_rate)], name="two_bus")


def single_bus_fleet(pmaxes, fors, load):
    return make_case([(1, load)], [], list(zip([1] * len(pmaxes), pmaxes, fors)), name="fleet")


def ring4():
    return make_case(
        [(1, 0.0), (2, 50.0), (3, 50.0), (4, 50.0)],
        [(1, 2, 0.1), (2, 3, 0.1), (3, 4, 0.1), (4, 1, 0.1)],
        [(1, 300.0)],
        name="ring4",
    )


def path3():
    return make_case(
        [(1, 0.0), (2, 20.0), (3, 20.0)],
        [(1, 2, 0.1), (2, 3, 0.1)],
        [(1, 100.0)],
        name="path3",
    )


def triangle_dc():
    """Three buses, four units; line 1-3 limit binds when the bus-1 units carry the load."""
    return make_case(
        [(1, 0.0), (2, 40.0), (3, 110.0)],
        [(1, 2, 0.1, 100.0), (2, 3, 0.1, 100.0), (1, 3, 0.1, 60.0)],
        [(1, 80.0, 0.1), (1, 50.0, 0.05), (2, 40.0, 0.08), (3, 30.0, 0.12)],
        name="triangle",
    )


def ring4_dc_text():
    """Four-bus ring with eight units and tight line limits."""
    return case_text(
        [(1, 0.0), (2, 60.0), (3, 110.0), (4, 50.0)],
        [(1, 2, 0.08, 90.0), (2, 3, 0.1, 45.0), (3, 4, 0.12, 60.0), (4, 1, 0.09, 80.0)],
        [(1, 60.0, 0.05), (1, 60.0, 0.05), (2, 40.0, 0.1), (2, 20.0, 0.02),
         (3, 50.0, 0.08), (3, 25.0, 0.04), (4, 30.0, 0.1), (4, 15.0, 0.03)],
        name="ring4_dc",
    )


def ring4_dc():
    return parse_case(ring4_dc_text())


ACCEPTANCE_TOYS = {
    "fleet2": lambda: single_bus_fleet([100.0, 100.0], [0.1, 0.1], 150.0),
    "fleet6": lambda: single_bus_fleet([50, 40, 40, 30, 20, 20], [0.04, 0.06, 0.08, 0.1, 0.02, 0.12], 150.0),
    "fleet12": lambda: single_bus_fleet(
        [12, 20, 20, 50, 76, 76, 100, 100, 155, 12, 20, 50],
        [0.02, 0.1, 0.1, 0.01, 0.02, 0.02, 0.04, 0.04, 0.04, 0.02, 0.1, 0.01],
        560.0,
    ),
    "triangle_dc": triangle_dc,
    "ring4_dc": ring4_dc,
}
