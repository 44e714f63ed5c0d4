"""How the cabin PMV responds to air temperature, sunshine and vent flow."""

import numpy as np

from ceco.comfort import ComfortEnv, OccupantParams, pmv_modified, pmv_original, sensation_level

occ = OccupantParams()  # seated, 1 met, 0.5 clo

# Plain indoor PMV: still air, walls at air temperature
for t in (20.0, 24.0, 26.0, 28.0, 32.0):
    y = pmv_original(occ, ComfortEnv(t_a=t, t_mr=t, v_air=0.1))
    print(f"{t:5.1f} degC  pmv {y:+.2f}  {sensation_level(y)}")

# Cabin PMV: the occupant sees a blend of cabin and vent air, the interior
# surfaces as radiant temperature and the sun on the metabolic side.
t_cab = np.linspace(20.0, 32.0, 7)
shade = pmv_modified(t_cab, 10.0, 30.0, 0.08, 0.0, occ)
sun = pmv_modified(t_cab, 10.0, 30.0, 0.08, 1000.0, occ)
print("\nt_cab  shade   sun")
for row in zip(t_cab, shade, sun):
    print("{:5.1f} {:+6.2f} {:+6.2f}".format(*row))

# More blower flow means colder blended air and faster air, so PMV drops
for m_bl in (0.05, 0.10, 0.17):
    y = pmv_modified(26.0, 10.0, 30.0, m_bl, 600.0, occ)
    print(f"m_bl {m_bl:.2f} kg/s  pmv {y:+.2f}")
