"""Marching-squares segment extraction.

Grid values are indexed ``[row j, column i]``. For cell ``(j, i)`` the corners
are c0=(j,i), c1=(j,i+1), c2=(j+1,i+1), c3=(j+1,i) and the local edges are
e0=c0-c1, e1=c1-c2, e2=c3-c2, e3=c0-c3. A corner is "above" when its value is
``>= level``. Saddle cells are split by the average of the four corners.

Crossing points are always interpolated from the lower-index end of the edge,
so the two cells that share an edge produce bit-identical coordinates.
Edges carry global ids (horizontal first, then vertical) for stitching.
"""

import numpy as np

from ._accel import njit, pick


def _build_table():
    # table[case, center_above, slot] = (local edge a, local edge b) or (-1, -1)
    corner_edges = ((0, 3), (0, 1), (1, 2), (2, 3))
    table = -np.ones((16, 2, 2, 2), dtype=np.int64)
    for case in range(16):
        bits = [(case >> c) & 1 for c in range(4)]
        crossing = [e for e, (p, q) in enumerate(((0, 1), (1, 2), (3, 2), (0, 3)))
                    if bits[p] != bits[q]]
        for centre in (0, 1):
            if len(crossing) == 2:
                table[case, centre, 0] = crossing
            elif len(crossing) == 4:
                # isolate the corners whose class differs from the centre's
                isolated = [c for c in range(4) if bits[c] != centre]
                for slot, c in enumerate(isolated):
                    table[case, centre, slot] = sorted(corner_edges[c])
    return table


SEGMENT_TABLE = _build_table()


@njit
def _segments_loop(values, level, table):
    ny, nx = values.shape
    n_h = ny * (nx - 1)
    cap = 2 * (ny - 1) * (nx - 1)
    pts = np.empty((cap, 4))
    ids = np.empty((cap, 2), dtype=np.int64)
    m = 0
    ex = np.empty(4)
    ey = np.empty(4)
    eid = np.empty(4, dtype=np.int64)
    for j in range(ny - 1):
        for i in range(nx - 1):
            v0 = values[j, i]
            v1 = values[j, i + 1]
            v2 = values[j + 1, i + 1]
            v3 = values[j + 1, i]
            case = 0
            if v0 >= level:
                case |= 1
            if v1 >= level:
                case |= 2
            if v2 >= level:
                case |= 4
            if v3 >= level:
                case |= 8
            if case == 0 or case == 15:
                continue
            centre = 1 if 0.25 * (v0 + v1 + v2 + v3) >= level else 0
            # e0: bottom, e1: right, e2: top, e3: left
            if (case & 1) != ((case >> 1) & 1):
                ex[0] = i + (level - v0) / (v1 - v0)
                ey[0] = j
            if ((case >> 1) & 1) != ((case >> 2) & 1):
                ex[1] = i + 1
                ey[1] = j + (level - v1) / (v2 - v1)
            if ((case >> 3) & 1) != ((case >> 2) & 1):
                ex[2] = i + (level - v3) / (v2 - v3)
                ey[2] = j + 1
            if (case & 1) != ((case >> 3) & 1):
                ex[3] = i
                ey[3] = j + (level - v0) / (v3 - v0)
            eid[0] = j * (nx - 1) + i
            eid[1] = n_h + j * nx + i + 1
            eid[2] = (j + 1) * (nx - 1) + i
            eid[3] = n_h + j * nx + i
            for slot in range(2):
                a = table[case, centre, slot, 0]
                if a < 0:
                    break
                b = table[case, centre, slot, 1]
                pts[m, 0] = ex[a]
                pts[m, 1] = ey[a]
                pts[m, 2] = ex[b]
                pts[m, 3] = ey[b]
                ids[m, 0] = eid[a]
                ids[m, 1] = eid[b]
                m += 1
    return pts[:m].copy(), ids[:m].copy()


def _segments_np(values, level, table):
    ny, nx = values.shape
    n_h = ny * (nx - 1)
    v0 = values[:-1, :-1]
    v1 = values[:-1, 1:]
    v2 = values[1:, 1:]
    v3 = values[1:, :-1]
    a0, a1, a2, a3 = v0 >= level, v1 >= level, v2 >= level, v3 >= level
    case = a0 * 1 + a1 * 2 + a2 * 4 + a3 * 8
    centre = (0.25 * (v0 + v1 + v2 + v3) >= level).astype(np.int64)
    jj, ii = np.meshgrid(np.arange(ny - 1), np.arange(nx - 1), indexing="ij")

    with np.errstate(divide="ignore", invalid="ignore"):
        ex = np.stack([ii + (level - v0) / (v1 - v0),
                       ii + 1.0 + 0.0 * v0,
                       ii + (level - v3) / (v2 - v3),
                       ii + 0.0 * v0], axis=-1)
        ey = np.stack([jj + 0.0 * v0,
                       jj + (level - v1) / (v2 - v1),
                       jj + 1.0 + 0.0 * v0,
                       jj + (level - v0) / (v3 - v0)], axis=-1)
    eid = np.stack([jj * (nx - 1) + ii,
                    n_h + jj * nx + ii + 1,
                    (jj + 1) * (nx - 1) + ii,
                    n_h + jj * nx + ii], axis=-1)

    flat_case = case.ravel()
    flat_centre = centre.ravel()
    ex = ex.reshape(-1, 4)
    ey = ey.reshape(-1, 4)
    eid = eid.reshape(-1, 4)
    cell_parts, pts_parts, id_parts = [], [], []
    for slot in range(2):
        pair = table[flat_case, flat_centre, slot]  # (cells, 2)
        sel = np.nonzero(pair[:, 0] >= 0)[0]
        a = pair[sel, 0]
        b = pair[sel, 1]
        pts_parts.append(np.stack([ex[sel, a], ey[sel, a], ex[sel, b], ey[sel, b]], axis=1))
        id_parts.append(np.stack([eid[sel, a], eid[sel, b]], axis=1))
        cell_parts.append(sel * 2 + slot)
    order = np.argsort(np.concatenate(cell_parts), kind="stable")
    pts = np.concatenate(pts_parts)[order]
    ids = np.concatenate(id_parts)[order].astype(np.int64)
    return pts.reshape(-1, 4), ids.reshape(-1, 2)


segments = pick(_segments_loop, _segments_np)


def stitch(pts, ids):
    """Join segments sharing an edge into polylines (index coordinates).

    Open chains (ending on the grid border) come first, then closed loops,
    which repeat their first vertex at the end.
    """
    point_of = {}
    touching = {}
    for s in range(len(ids)):
        for end in (0, 1):
            e = int(ids[s, end])
            point_of[e] = (pts[s, 2 * end], pts[s, 2 * end + 1])
            touching.setdefault(e, []).append(s)

    used = np.zeros(len(ids), dtype=bool)

    def walk(start_edge, seg):
        edge = start_edge
        line = [point_of[edge]]
        while True:
            used[seg] = True
            a, b = int(ids[seg, 0]), int(ids[seg, 1])
            edge = b if a == edge else a
            line.append(point_of[edge])
            nxt = [s for s in touching[edge] if not used[s]]
            if not nxt:
                return line
            seg = nxt[0]

    lines = []
    for s in range(len(ids)):
        if used[s]:
            continue
        for end in (0, 1):
            e = int(ids[s, end])
            if len(touching[e]) == 1:
                lines.append(walk(e, s))
                break
    for s in range(len(ids)):
        if not used[s]:
            lines.append(walk(int(ids[s, 0]), s))
    return [np.asarray(line, dtype=np.float64) for line in lines]
