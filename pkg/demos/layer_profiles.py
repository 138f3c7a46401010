"""
One-dimensional transition layers
=================================

The wall profile ``u(t) = sin((pi/2) arcsin(tanh(t/eps)) / arcsin(tanh(beta/eps)))``
switches from -1 to 1 inside ``|t| < beta``.  Its local energy is close to
the optimal value 2, while its half-order seminorm and its logarithmic
self-interaction grow like ``4 log(1/eps)``.  A second profile ``eta``
cuts off logarithmically and is used to test the lower bound.
"""
from chargedwall.recovery import eta_checks, profile_integrals

print(" eps      (i)     (ii)/log  (iii)/log  (iv)")
for eps in (1e-2, 1e-3, 1e-4):
    r = profile_integrals(eps, 0.1)
    print(f"{eps:7.0e}  {r['local']:.5f}  {r['h_half_ratio']:.4f}   {r['log_u_ratio']:.4f}"
          f"     {r['v_terms']:.3f}")

# %%
# The (ii) ratio creeps up to 4 because the additive constant is negative.
r = profile_integrals(1e-4, 0.1)
print(f"\n(ii) - 4 log(1 + R/eps) = {r['h_half_margin']:.3f}")

# %%
print("\n eps     |log eps| int t |eta'|^2   |log eps|^2 * mass")
for eps in (1e-2, 1e-4, 1e-6):
    e = eta_checks(eps)
    print(f"{eps:7.0e}  {e['weighted_scaled']:.4f}                 {e['mass_scaled']:.3f}")
