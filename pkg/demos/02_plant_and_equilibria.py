"""Walk the turbine model: coefficient surfaces, equilibria, design models.

Below rated wind the turbine runs at the optimal tip speed ratio with zero
pitch; above rated the pitch angle moves along the rated-torque locus. The
linearized design models change structure at that boundary.
"""

import numpy as np

from torsim import (NREL5MW, cp_surface, discretize, find_equilibrium,
                    linearize)

p = NREL5MW
print(f"rotor-side rated torque {p.rated_gen_torque/1e6:.3f} MNm, "
      f"rated speed {p.rated_rotor_speed*30/np.pi:.1f} rpm, "
      f"rated mechanical power {p.rated_power/1e6:.3f} MW")

print("\npower coefficient along zero pitch:")
for lam in (4.0, 6.0, 7.55, 9.0, 12.0):
    print(f"  lambda={lam:5.2f}: C_p={cp_surface(lam, 0.0):.4f}")

print("\nequilibrium locus:")
for v0 in (8.0, 10.0, 11.4, 14.0, 18.0, 22.0, 24.0):
    eq = find_equilibrium(v0, p)
    print(f"  v0={v0:5.1f}: {eq.region}  omega*={eq.x_star.omega_r:.4f} rad/s  "
          f"theta*={np.degrees(eq.theta_star):6.2f} deg  "
          f"M_g*={eq.u_star.m_g/1e6:.3f} MNm")

print("\ndesign models at 10 and 18 m/s:")
for v0 in (10.0, 18.0):
    m = linearize(find_equilibrium(v0, p))
    md = discretize(m, 0.1)
    ev = np.linalg.eigvals(m.a)
    print(f"  v0={v0}: {m.region}, n={m.n}, "
          f"gamma={m.gamma:+.2e}, alpha={m.alpha:+.2e}, beta={m.beta:+.2e}")
    print(f"    slowest continuous mode Re={ev.real.max():+.4f} 1/s, "
          f"rho(A_d)={np.abs(np.linalg.eigvals(md.a)).max():.4f} at Ts=0.1 s")
