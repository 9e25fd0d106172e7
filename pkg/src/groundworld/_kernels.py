"""Hot numeric kernels: triangle rasterization and strided 2D convolution.

Each kernel has a numba @njit build and a pure-numpy build. The numba path is
the default; set GROUNDWORLD_NUMBA=0 to force numpy. Both paths are written
so per-element floating-point operations happen in the same order, so the
forward kernels agree bitwise (the convolution weight-gradient reduction is
the one exception: numpy's pairwise summation differs in the last ulps).
"""

from __future__ import annotations

import math
import os

import numpy as np

NUMBA_REQUESTED = os.environ.get("GROUNDWORLD_NUMBA", "1") != "0"

try:
    from numba import njit as _njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def _njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


def numba_active() -> bool:
    return NUMBA_AVAILABLE and NUMBA_REQUESTED


# ---------------------------------------------------------------------------
# Rasterization. Screen-space triangles with camera-space depth, z-buffered
# with pixel centers at (px + 0.5, py + 0.5).


def _clip_project_impl(cam, tris, near, far, fproj, width, height,
                       out_screen, out_depth, out_src):
    """Near-clip and project camera-space triangles; returns triangle count.

    `out_*` must hold 2 * len(tris) rows (one clip can split a triangle in two).
    """
    n_out = 0
    half_w = 0.5 * width
    half_h = 0.5 * height
    poly_x = np.empty(4, np.float64)
    poly_y = np.empty(4, np.float64)
    poly_z = np.empty(4, np.float64)
    clip_x = np.empty(4, np.float64)
    clip_y = np.empty(4, np.float64)
    clip_z = np.empty(4, np.float64)
    for t in range(tris.shape[0]):
        i0, i1, i2 = tris[t, 0], tris[t, 1], tris[t, 2]
        z0, z1, z2 = cam[i0, 2], cam[i1, 2], cam[i2, 2]
        if z0 <= near and z1 <= near and z2 <= near:
            continue
        if z0 >= far and z1 >= far and z2 >= far:
            continue
        poly_x[0], poly_y[0], poly_z[0] = cam[i0, 0], cam[i0, 1], z0
        poly_x[1], poly_y[1], poly_z[1] = cam[i1, 0], cam[i1, 1], z1
        poly_x[2], poly_y[2], poly_z[2] = cam[i2, 0], cam[i2, 1], z2
        n_poly = 3
        if z0 <= near or z1 <= near or z2 <= near:
            # Sutherland-Hodgman against the z = near plane.
            n_clip = 0
            for k in range(n_poly):
                j = (k + 1) % n_poly
                zk, zj = poly_z[k], poly_z[j]
                if zk > near:
                    clip_x[n_clip] = poly_x[k]
                    clip_y[n_clip] = poly_y[k]
                    clip_z[n_clip] = zk
                    n_clip += 1
                if (zk > near) != (zj > near):
                    s = (near - zk) / (zj - zk)
                    clip_x[n_clip] = poly_x[k] + s * (poly_x[j] - poly_x[k])
                    clip_y[n_clip] = poly_y[k] + s * (poly_y[j] - poly_y[k])
                    clip_z[n_clip] = near
                    n_clip += 1
            if n_clip < 3:
                continue
            n_poly = n_clip
            for k in range(n_poly):
                poly_x[k] = clip_x[k]
                poly_y[k] = clip_y[k]
                poly_z[k] = clip_z[k]
        # Fan-triangulate the (3- or 4-gon) result and project.
        for k in range(1, n_poly - 1):
            ia, ib, ic = 0, k, k + 1
            out_depth[n_out, 0] = poly_z[ia]
            out_depth[n_out, 1] = poly_z[ib]
            out_depth[n_out, 2] = poly_z[ic]
            out_screen[n_out, 0, 0] = (poly_x[ia] * fproj / poly_z[ia]) * half_w + half_w
            out_screen[n_out, 0, 1] = half_h - (poly_y[ia] * fproj / poly_z[ia]) * half_h
            out_screen[n_out, 1, 0] = (poly_x[ib] * fproj / poly_z[ib]) * half_w + half_w
            out_screen[n_out, 1, 1] = half_h - (poly_y[ib] * fproj / poly_z[ib]) * half_h
            out_screen[n_out, 2, 0] = (poly_x[ic] * fproj / poly_z[ic]) * half_w + half_w
            out_screen[n_out, 2, 1] = half_h - (poly_y[ic] * fproj / poly_z[ic]) * half_h
            out_src[n_out] = t
            n_out += 1
    return n_out


def _rasterize_impl(screen, depth, colors, width, height, frame, zbuf):
    for t in range(screen.shape[0]):
        x0, y0 = screen[t, 0, 0], screen[t, 0, 1]
        x1, y1 = screen[t, 1, 0], screen[t, 1, 1]
        x2, y2 = screen[t, 2, 0], screen[t, 2, 1]
        z0, z1, z2 = depth[t, 0], depth[t, 1], depth[t, 2]
        min_x = int(math.floor(min(x0, min(x1, x2))))
        max_x = int(math.ceil(max(x0, max(x1, x2))))
        min_y = int(math.floor(min(y0, min(y1, y2))))
        max_y = int(math.ceil(max(y0, max(y1, y2))))
        if min_x < 0:
            min_x = 0
        if min_y < 0:
            min_y = 0
        if max_x > width:
            max_x = width
        if max_y > height:
            max_y = height
        if min_x >= max_x or min_y >= max_y:
            continue
        r, g, b = colors[t, 0], colors[t, 1], colors[t, 2]
        for py in range(min_y, max_y):
            cy = py + 0.5
            for px in range(min_x, max_x):
                cx = px + 0.5
                w0 = (x2 - x1) * (cy - y1) - (y2 - y1) * (cx - x1)
                w1 = (x0 - x2) * (cy - y2) - (y0 - y2) * (cx - x2)
                w2 = (x1 - x0) * (cy - y0) - (y1 - y0) * (cx - x0)
                pos = w0 >= 0.0 and w1 >= 0.0 and w2 >= 0.0
                neg = w0 <= 0.0 and w1 <= 0.0 and w2 <= 0.0
                if not (pos or neg):
                    continue
                area = w0 + w1 + w2
                if area == 0.0:
                    continue
                z = (w0 * z0 + w1 * z1 + w2 * z2) / area
                if z < zbuf[py, px]:
                    zbuf[py, px] = z
                    frame[0, py, px] = r
                    frame[1, py, px] = g
                    frame[2, py, px] = b


def _rasterize_np(screen, depth, colors, width, height, frame, zbuf):
    """Vectorized-per-triangle twin of `_rasterize_impl` (bitwise-identical)."""
    ys_full = np.arange(height, dtype=np.float64) + 0.5
    xs_full = np.arange(width, dtype=np.float64) + 0.5
    for t in range(screen.shape[0]):
        x0, y0 = screen[t, 0, 0], screen[t, 0, 1]
        x1, y1 = screen[t, 1, 0], screen[t, 1, 1]
        x2, y2 = screen[t, 2, 0], screen[t, 2, 1]
        z0, z1, z2 = depth[t, 0], depth[t, 1], depth[t, 2]
        min_x = max(int(math.floor(min(x0, x1, x2))), 0)
        max_x = min(int(math.ceil(max(x0, x1, x2))), width)
        min_y = max(int(math.floor(min(y0, y1, y2))), 0)
        max_y = min(int(math.ceil(max(y0, y1, y2))), height)
        if min_x >= max_x or min_y >= max_y:
            continue
        cy = ys_full[min_y:max_y, None]
        cx = xs_full[None, min_x:max_x]
        w0 = (x2 - x1) * (cy - y1) - (y2 - y1) * (cx - x1)
        w1 = (x0 - x2) * (cy - y2) - (y0 - y2) * (cx - x2)
        w2 = (x1 - x0) * (cy - y0) - (y1 - y0) * (cx - x0)
        inside = ((w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)) | (
            (w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0)
        )
        area = w0 + w1 + w2
        inside &= area != 0.0
        if not inside.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (w0 * z0 + w1 * z1 + w2 * z2) / area
        zb = zbuf[min_y:max_y, min_x:max_x]
        upd = inside & (z < zb)
        if not upd.any():
            continue
        zb[upd] = z[upd]
        for ch in range(3):
            frame[ch, min_y:max_y, min_x:max_x][upd] = colors[t, ch]


_clip_project_njit = None
_rasterize_njit = None


def _compiled_clip_project():
    global _clip_project_njit
    if _clip_project_njit is None:
        _clip_project_njit = _njit(cache=True)(_clip_project_impl)
    return _clip_project_njit


def _compiled_rasterize():
    global _rasterize_njit
    if _rasterize_njit is None:
        _rasterize_njit = _njit(cache=True)(_rasterize_impl)
    return _rasterize_njit


def render_triangles(
    cam: np.ndarray,
    tris: np.ndarray,
    colors_u8: np.ndarray,
    width: int,
    height: int,
    near: float,
    far: float,
    fproj: float,
    background: tuple[int, int, int],
    use_numba: bool | None = None,
) -> np.ndarray:
    """Full raster pass over camera-space geometry; returns (3, H, W) uint8."""
    if use_numba is None:
        use_numba = numba_active()
    max_out = 2 * len(tris)
    out_screen = np.empty((max_out, 3, 2), np.float64)
    out_depth = np.empty((max_out, 3), np.float64)
    out_src = np.empty(max_out, np.int64)
    clip = _compiled_clip_project() if use_numba else _clip_project_impl
    n = clip(cam, tris, near, far, fproj, width, height, out_screen, out_depth, out_src)
    frame = np.empty((3, height, width), np.uint8)
    frame[0], frame[1], frame[2] = background
    zbuf = np.full((height, width), far, np.float64)
    tri_colors = colors_u8[out_src[:n]]
    if use_numba:
        _compiled_rasterize()(out_screen[:n], out_depth[:n], tri_colors, width, height, frame, zbuf)
    else:
        _rasterize_np(out_screen[:n], out_depth[:n], tri_colors, width, height, frame, zbuf)
    return frame


# ---------------------------------------------------------------------------
# Strided valid convolution (no padding), batch-first NCHW.


def _conv2d_fwd_impl(x, w, stride, out):
    batch, cin, _, _ = x.shape
    cout, _, kh, kw = w.shape
    oh, ow = out.shape[2], out.shape[3]
    for b in range(batch):
        for c in range(cin):
            for ky in range(kh):
                for kx in range(kw):
                    for oc in range(cout):
                        wv = w[oc, c, ky, kx]
                        for oy in range(oh):
                            iy = oy * stride + ky
                            for ox in range(ow):
                                out[b, oc, oy, ox] += wv * x[b, c, iy, ox * stride + kx]


def _conv2d_bwd_x_impl(go, w, stride, gx):
    batch, cout, oh, ow = go.shape
    _, cin, kh, kw = w.shape
    for b in range(batch):
        for c in range(cin):
            for ky in range(kh):
                for kx in range(kw):
                    for oc in range(cout):
                        wv = w[oc, c, ky, kx]
                        for oy in range(oh):
                            iy = oy * stride + ky
                            for ox in range(ow):
                                gx[b, c, iy, ox * stride + kx] += go[b, oc, oy, ox] * wv


def _conv2d_bwd_w_impl(go, x, stride, gw):
    batch, cout, oh, ow = go.shape
    _, cin, kh, kw = gw.shape
    for oc in range(cout):
        for c in range(cin):
            for ky in range(kh):
                for kx in range(kw):
                    acc = 0.0
                    for b in range(batch):
                        for oy in range(oh):
                            iy = oy * stride + ky
                            for ox in range(ow):
                                acc += go[b, oc, oy, ox] * x[b, c, iy, ox * stride + kx]
                    gw[oc, c, ky, kx] = acc


_conv_fwd_njit = None
_conv_bwd_x_njit = None
_conv_bwd_w_njit = None


def _get_conv_fwd():
    global _conv_fwd_njit
    if _conv_fwd_njit is None:
        _conv_fwd_njit = _njit(cache=True)(_conv2d_fwd_impl)
    return _conv_fwd_njit


def _get_conv_bwd_x():
    global _conv_bwd_x_njit
    if _conv_bwd_x_njit is None:
        _conv_bwd_x_njit = _njit(cache=True)(_conv2d_bwd_x_impl)
    return _conv_bwd_x_njit


def _get_conv_bwd_w():
    global _conv_bwd_w_njit
    if _conv_bwd_w_njit is None:
        _conv_bwd_w_njit = _njit(cache=True)(_conv2d_bwd_w_impl)
    return _conv_bwd_w_njit


def conv_out_size(n: int, k: int, s: int) -> int:
    return (n - k) // s + 1


def conv2d_forward(x: np.ndarray, w: np.ndarray, stride: int,
                   use_numba: bool | None = None) -> np.ndarray:
    if use_numba is None:
        use_numba = numba_active()
    batch, _, h, width = x.shape
    cout, _, kh, kw = w.shape
    oh, ow = conv_out_size(h, kh, stride), conv_out_size(width, kw, stride)
    out = np.zeros((batch, cout, oh, ow), dtype=x.dtype)
    if use_numba:
        _get_conv_fwd()(x, w, stride, out)
        return out
    for c in range(x.shape[1]):
        for ky in range(kh):
            for kx in range(kw):
                patch = x[:, c, ky : ky + oh * stride : stride, kx : kx + ow * stride : stride]
                out += w[None, :, c, ky, kx, None, None] * patch[:, None, :, :]
    return out


def conv2d_backward_x(go: np.ndarray, w: np.ndarray, stride: int, h: int, width: int,
                      use_numba: bool | None = None) -> np.ndarray:
    if use_numba is None:
        use_numba = numba_active()
    batch, cout, oh, ow = go.shape
    cin = w.shape[1]
    kh, kw = w.shape[2], w.shape[3]
    gx = np.zeros((batch, cin, h, width), dtype=go.dtype)
    if use_numba:
        _get_conv_bwd_x()(go, w, stride, gx)
        return gx
    for c in range(cin):
        for ky in range(kh):
            for kx in range(kw):
                target = gx[:, c, ky : ky + oh * stride : stride, kx : kx + ow * stride : stride]
                target += np.einsum("boyx,o->byx", go, w[:, c, ky, kx])
    return gx


def conv2d_backward_w(go: np.ndarray, x: np.ndarray, stride: int, kh: int, kw: int,
                      use_numba: bool | None = None) -> np.ndarray:
    if use_numba is None:
        use_numba = numba_active()
    batch, cout, oh, ow = go.shape
    cin = x.shape[1]
    gw = np.zeros((cout, cin, kh, kw), dtype=go.dtype)
    if use_numba:
        _get_conv_bwd_w()(go, x, stride, gw)
        return gw
    for ky in range(kh):
        for kx in range(kw):
            patch = x[:, :, ky : ky + oh * stride : stride, kx : kx + ow * stride : stride]
            gw[:, :, ky, kx] = np.einsum("boyx,bcyx->oc", go, patch)
    return gw
