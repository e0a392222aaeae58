"""Does staggering the microphone clocks help?

Mics 2 and 3 get a sampling phase of 0, 1/4, 1/2 or 3/4 of a period,
chosen at random per trial.  One-way ANOVA asks whether the mean position
error differs between offset levels, separately for each microphone.
"""

from locagen.geometry import ArrayGeometry
from locagen.simulate import SimConfig, run_offset_experiment
from locagen.stats import offset_anova

table = run_offset_experiment(SimConfig(ArrayGeometry.equilateral(0.1)), 3000)
for mic, res in zip((2, 3), offset_anova(table)):
    means = ", ".join(f"{lvl:.2f}: {m:.1f} m" for lvl, m in zip(res.labels, res.group_means))
    print(f"mic {mic}: F({res.df_between}, {res.df_within}) = {res.f_statistic:.3f}  "
          f"p = {res.p_value:.3f}  means [{means}]")
