# %% [markdown]
# # Power density offset between PUSCH and SRS
#
# A UE sizes PUSCH and SRS power with the same open-loop formula but very
# different bandwidths. A wideband SRS over 272 RBs hits the power cap long
# before a 2-RBG PUSCH does, so the SRS arrives with a lower power per RE.
# That gap is the PDO.

# %%
from pdola.power_control import (
    DynamicPowerState, Kind, PowerParams, SchedulingContext, TxRecord,
    compute_pdo, power_density, scheduling_pdo, tx_power,
)

params = PowerParams(p_cmax_dbm=23, p_o_dbm=-80, alpha_pc=1.0, mu=0)
state = DynamicPowerState(pathloss_db=90)

p_srs = tx_power(params, state, n_rb=272)   # capped at 23 dBm
p_pusch = tx_power(params, state, n_rb=8)   # 19.03 dBm, not capped
print(p_srs, p_pusch)

# %% [markdown]
# Spread over REs: comb-4 SRS uses 3 REs per RB, PUSCH uses all 12.

# %%
srs = TxRecord(2, Kind.SRS, p_srs, 272, 3)
pusch = TxRecord(3, Kind.PUSCH, p_pusch, 8, 12)
print("SRS density  %.3f dBm/RE" % power_density(srs))
print("PUSCH density %.3f dBm/RE" % power_density(pusch))
print("PDO %.3f dB" % compute_pdo(pusch, srs))

# %% [markdown]
# The scheduler only knows what was sent before the grant slot. With the
# grant in slot 4 and K2 = 3, an SRS in slot 6 does not count yet.

# %%
late_srs = TxRecord(6, Kind.SRS, 10.0, 272, 3)
ctx = SchedulingContext(grant_slot=4, k2=3, pusch_history=[pusch], srs_history=[srs, late_srs])
print(scheduling_pdo(ctx), "dB, PUSCH goes out in slot", ctx.pusch_slot)

# nothing sent yet: the scheduler assumes no offset
print(scheduling_pdo(SchedulingContext(grant_slot=1)))
