"""Independent reference computations used to freeze expected values.

Nothing here imports the package's geometry or path code, so agreement is a
real cross-check.
"""
import math

import networkx as nx

EARTH_RADIUS_KM = 6371.0
C_LIGHT = 299_792_458.0


def chord_km(radius_km, angle_rad):
    return 2.0 * radius_km * math.sin(angle_rad / 2.0)


def great_circle_angle(lat1, lon1, lat2, lon2):
    """Central angle between two points given in radians (haversine)."""
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2.0 * math.asin(math.sqrt(h))


def orbit_latlon(inclination_deg, raan_deg, u_rad):
    """Latitude/longitude (radians, inertial) of argument of latitude u on a circular orbit."""
    i, om = math.radians(inclination_deg), math.radians(raan_deg)
    lat = math.asin(math.sin(i) * math.sin(u_rad))
    lon = om + math.atan2(math.cos(i) * math.sin(u_rad), math.cos(u_rad))
    return lat, lon


def all_simple_paths_sorted(edges, src, dst):
    """Every simple path, sorted by (total weight, vertex sequence)."""
    g = nx.DiGraph()
    for (u, v), w in edges.items():
        g.add_edge(u, v, w=w)
    out = []
    for p in nx.all_simple_paths(g, src, dst):
        out.append((sum(g[a][b]["w"] for a, b in zip(p, p[1:])), tuple(p)))
    return sorted(out)


def deadline(d_phy, alpha, delta_buf, d_max):
    return min(alpha * d_phy, d_phy + delta_buf, d_max)
