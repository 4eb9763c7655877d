# %% [markdown]
# # The four estimators
#
# SRSC and CRSC work on the regularized Laplacian (simplex and cone
# geometry); SSC and SRM work on ``R`` itself.  On the noiseless matrix
# ``Pi Theta'`` they all recover the truth to rounding error.

# %%
from gomspectral import FitConfig, fit, hamming_error, relative_error, sample_gom

inst = sample_gom(800, 200, 3, 4, 1.0, seed=1)
for method in ("SRSC", "CRSC", "SSC", "SRM"):
    res = fit(inst.population(), method, FitConfig(3))
    print(method, "noiseless Hamming", f"{hamming_error(res.pi_hat, inst.pi).value:.1e}")

# %% [markdown]
# On sampled responses the errors are those of a finite sample.

# %%
r = inst.responses()
truth = inst.truth_for(r)
for method in ("SRSC", "CRSC", "SSC", "SRM"):
    res = fit(r, method, FitConfig(3))
    print(method, f"Hamming {hamming_error(res.pi_hat, truth).value:.3f}",
          f"Relative {relative_error(res.theta_hat, inst.theta).value:.3f}",
          f"{res.elapsed:.3f}s")
