"""Zero-terminal-SNR rescaling and the forward-map collapse.

Rescales the default scaled-linear schedule so the terminal alpha_bar is
exactly zero, then shows that the forward map at T returns the noise
bit-exactly regardless of the clean latent: the map is not injective at
the terminal step, so inversion plans refuse to touch it.
"""

from latentdolly import (
    CollapseError,
    Rng,
    forward_diffuse,
    gaussian,
    inversion_plan,
    make_schedule,
    rescale_zero_terminal_snr,
    snr,
)

pos = make_schedule(1000, 0.00085, 0.012)
zero = rescale_zero_terminal_snr(pos)

print("terminal alpha_bar before rescale:", pos.alpha_bar(1000))
print("terminal alpha_bar after rescale: ", zero.alpha_bar(1000))
print("first-step alpha_bar preserved:   ", pos.alpha_bar(1), "->", zero.alpha_bar(1))
print("terminal SNR:", snr(zero, 1000))

dims = (1, 1, 4, 16, 16)
eps = gaussian(dims, Rng(0).split("eps"))
for seed in range(3):
    x0 = gaussian(dims, Rng(seed).split("x0"))
    x_T = forward_diffuse(x0, eps, zero.alpha_bar(1000))
    print(f"x0 seed {seed}: forward map at T returns eps bit-exactly:",
          x_T.data.tobytes() == eps.data.tobytes())

try:
    inversion_plan(zero, 30, 1000)
except CollapseError as exc:
    print("inversion plan to T refused:", exc)

plan = inversion_plan(zero, 30, 999)
print("plan to T-1 is fine; smallest alpha_bar on plan:", min(plan.alpha_bars))
