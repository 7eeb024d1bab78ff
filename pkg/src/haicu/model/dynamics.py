"""Closed-form propagation of Gaussian control beliefs into position space.

Two dynamics models are provided:

* single integrator: controls are planar velocities. The map from controls to
  positions is linear, so a Gaussian belief over per-step controls propagates
  exactly (no sampling, no linearization).
* dynamically-extended unicycle: controls are (heading rate, longitudinal
  acceleration) acting on state (x, y, heading, speed). The mean uses the
  exact constant-control step; covariance propagates to first order via the
  step Jacobians, in extended-Kalman fashion.

All functions accept torch tensors or numpy arrays with arbitrary leading
batch dimensions and time as the second-to-last axis; numpy in, numpy out.
Per-step controls are treated as independent across time.
"""
from __future__ import annotations

import math
from typing import Tuple

import numpy as np
import torch

from ..errors import InvalidParameterError, NonPSDError

OMEGA_STRAIGHT_THRESHOLD = 1e-3  # rad/s; below this the straight-line limit is used


def _to_tensor(x, dtype=None):
    if isinstance(x, torch.Tensor):
        return x if dtype is None else x.to(dtype)
    return torch.as_tensor(np.asarray(x), dtype=dtype or torch.float64)


def _check_psd_2x2(cov: torch.Tensor, tol: float = 1e-7) -> None:
    """Cheap closed-form PSD check for (..., 2, 2) symmetric matrices."""
    a = cov[..., 0, 0]
    d = cov[..., 1, 1]
    b = cov[..., 0, 1]
    c = cov[..., 1, 0]
    if not torch.allclose(b, c, atol=1e-6, rtol=1e-4):
        raise NonPSDError("control covariance is not symmetric")
    scale = torch.clamp(torch.maximum(a.abs(), d.abs()), min=1.0)
    tr = a + d
    disc = torch.sqrt(torch.clamp((a - d) ** 2 + 4 * b * b, min=0.0))
    lam_min = 0.5 * (tr - disc)
    if torch.any(lam_min < -tol * scale):
        raise NonPSDError(f"control covariance has negative eigenvalue {float(lam_min.min())}")


def integrate_single_integrator(control_mean, control_cov, p0, dt: float):
    """Propagate per-step velocity Gaussians into position Gaussians.

    mean_t = p0 + dt * sum_{tau<=t} u_mean_tau
    cov_t  = dt^2 * sum_{tau<=t} u_cov_tau

    Parameters
    ----------
    control_mean : (..., T, 2)
    control_cov : (..., T, 2, 2), each PSD
    p0 : (..., 2) position at the prediction time
    dt : seconds per step, > 0

    Returns
    -------
    (pos_mean, pos_cov) : (..., T, 2) and (..., T, 2, 2)
    """
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    numpy_in = not isinstance(control_mean, torch.Tensor)
    mean = _to_tensor(control_mean)
    cov = _to_tensor(control_cov, dtype=mean.dtype)
    start = _to_tensor(p0, dtype=mean.dtype)
    _check_psd_2x2(cov.detach())
    pos_mean = start.unsqueeze(-2) + dt * torch.cumsum(mean, dim=-2)
    pos_cov = (dt * dt) * torch.cumsum(cov, dim=-3)
    if numpy_in:
        return pos_mean.numpy(), pos_cov.numpy()
    return pos_mean, pos_cov


def _unicycle_step_mean(state: torch.Tensor, control: torch.Tensor, dt: float) -> torch.Tensor:
    """Exact constant-control step of (x, y, theta, v) under (omega, a)."""
    x, y, th, v = state.unbind(-1)
    om, a = control.unbind(-1)
    straight = om.abs() < OMEGA_STRAIGHT_THRESHOLD
    om_safe = torch.where(straight, torch.ones_like(om), om)

    s1, c1 = torch.sin(th), torch.cos(th)
    th2 = th + om_safe * dt
    s2, c2 = torch.sin(th2), torch.cos(th2)

    x_curved = x + (v / om_safe) * (s2 - s1) + a * (dt * s2 / om_safe + (c2 - c1) / om_safe**2)
    y_curved = y - (v / om_safe) * (c2 - c1) + a * (-dt * c2 / om_safe + (s2 - s1) / om_safe**2)
    dist = v * dt + 0.5 * a * dt * dt
    x_line = x + dist * c1
    y_line = y + dist * s1

    return torch.stack(
        [
            torch.where(straight, x_line, x_curved),
            torch.where(straight, y_line, y_curved),
            th + om * dt,
            v + a * dt,
        ],
        dim=-1,
    )


def _unicycle_step_jacobians(
    state: torch.Tensor, control: torch.Tensor, dt: float
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Jacobians (F wrt state, G wrt control) of the exact step at (state, control)."""
    x, y, th, v = state.unbind(-1)
    om, a = control.unbind(-1)
    straight = om.abs() < OMEGA_STRAIGHT_THRESHOLD
    om_safe = torch.where(straight, torch.ones_like(om), om)

    s1, c1 = torch.sin(th), torch.cos(th)
    th2 = th + om_safe * dt
    s2, c2 = torch.sin(th2), torch.cos(th2)
    ds = s2 - s1
    dc = c2 - c1
    dist = v * dt + 0.5 * a * dt * dt

    # Curved-case partials.
    dx_dth_c = (v / om_safe) * dc + a * (dt * c2 / om_safe - ds / om_safe**2)
    dy_dth_c = (v / om_safe) * ds + a * (dt * s2 / om_safe + dc / om_safe**2)
    dx_dv_c = ds / om_safe
    dy_dv_c = -dc / om_safe
    dx_da_c = dt * s2 / om_safe + dc / om_safe**2
    dy_da_c = -dt * c2 / om_safe + ds / om_safe**2
    dx_dom_c = (
        -v * ds / om_safe**2
        + v * dt * c2 / om_safe
        + a * dt * dt * c2 / om_safe
        - 2 * a * dt * s2 / om_safe**2
        - 2 * a * dc / om_safe**3
    )
    dy_dom_c = (
        v * dc / om_safe**2
        + v * dt * s2 / om_safe
        + a * dt * dt * s2 / om_safe
        + 2 * a * dt * c2 / om_safe**2
        - 2 * a * ds / om_safe**3
    )

    # Straight-line limits (omega -> 0).
    dx_dth_l = -dist * s1
    dy_dth_l = dist * c1
    dx_dv_l = dt * c1
    dy_dv_l = dt * s1
    dx_da_l = 0.5 * dt * dt * c1
    dy_da_l = 0.5 * dt * dt * s1
    curve_term = v * dt * dt / 2 + a * dt**3 / 3
    dx_dom_l = -curve_term * s1
    dy_dom_l = curve_term * c1

    def pick(curved, line):
        return torch.where(straight, line, curved)

    zero = torch.zeros_like(x)
    one = torch.ones_like(x)
    f_rows = [
        torch.stack([one, zero, pick(dx_dth_c, dx_dth_l), pick(dx_dv_c, dx_dv_l)], dim=-1),
        torch.stack([zero, one, pick(dy_dth_c, dy_dth_l), pick(dy_dv_c, dy_dv_l)], dim=-1),
        torch.stack([zero, zero, one, zero], dim=-1),
        torch.stack([zero, zero, zero, one], dim=-1),
    ]
    g_rows = [
        torch.stack([pick(dx_dom_c, dx_dom_l), pick(dx_da_c, dx_da_l)], dim=-1),
        torch.stack([pick(dy_dom_c, dy_dom_l), pick(dy_da_c, dy_da_l)], dim=-1),
        torch.stack([dt * one, zero], dim=-1),
        torch.stack([zero, dt * one], dim=-1),
    ]
    return torch.stack(f_rows, dim=-2), torch.stack(g_rows, dim=-2)


def unicycle_integrate(control_mean, control_cov, initial_pose, dt: float):
    """Propagate (heading-rate, acceleration) Gaussians through unicycle dynamics.

    Parameters
    ----------
    control_mean : (..., T, 2) with components (omega rad/s, accel m/s^2)
    control_cov : (..., T, 2, 2), each PSD
    initial_pose : (..., 4) = (x, y, heading, speed)
    dt : seconds per step

    Returns
    -------
    (pos_mean, pos_cov) : (..., T, 2) and (..., T, 2, 2); first-order
    covariance propagation about the mean trajectory.
    """
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    numpy_in = not isinstance(control_mean, torch.Tensor)
    mean = _to_tensor(control_mean)
    cov = _to_tensor(control_cov, dtype=mean.dtype)
    pose = _to_tensor(initial_pose, dtype=mean.dtype)
    _check_psd_2x2(cov.detach())

    horizon = mean.shape[-2]
    batch_shape = mean.shape[:-2]
    state = pose
    p_cov = torch.zeros(*batch_shape, 4, 4, dtype=mean.dtype, device=mean.device)
    means_out = []
    covs_out = []
    for t in range(horizon):
        u = mean[..., t, :]
        f_jac, g_jac = _unicycle_step_jacobians(state, u, dt)
        state = _unicycle_step_mean(state, u, dt)
        p_cov = f_jac @ p_cov @ f_jac.transpose(-1, -2) + g_jac @ cov[..., t, :, :] @ g_jac.transpose(-1, -2)
        means_out.append(state[..., 0:2])
        covs_out.append(p_cov[..., 0:2, 0:2])
    pos_mean = torch.stack(means_out, dim=-2)
    pos_cov = torch.stack(covs_out, dim=-3)
    if numpy_in:
        return pos_mean.numpy(), pos_cov.numpy()
    return pos_mean, pos_cov


def pose_from_state(state_vector) -> np.ndarray:
    """(x, y, heading, speed) from a flat (px, py, vx, vy, ax, ay) state.

    Heading falls back to 0 when speed is below 1e-6 m/s.
    """
    if isinstance(state_vector, torch.Tensor):
        px, py, vx, vy = state_vector[..., 0], state_vector[..., 1], state_vector[..., 2], state_vector[..., 3]
        speed = torch.hypot(vx, vy)
        heading = torch.where(speed > 1e-6, torch.atan2(vy, vx), torch.zeros_like(vx))
        return torch.stack([px, py, heading, speed], dim=-1)
    s = np.asarray(state_vector, dtype=float)
    speed = math.hypot(s[2], s[3])
    heading = math.atan2(s[3], s[2]) if speed > 1e-6 else 0.0
    return np.array([s[0], s[1], heading, speed])
