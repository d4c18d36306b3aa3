# %% [markdown]
# # From simulated rounds to extracted bits
#
# Run the protocol against an honest server, estimate the statistics from
# the test rounds, then compress the raw string with a Toeplitz hash.

# %%
from sqrng.extract import ExtractionConfig, extract
from sqrng.protocol import ProtocolConfig, run_protocol
from sqrng.rate import ChannelModel, closed_form_rate, entropy_bound

# %%
for q in (0.0, 0.05, 0.1, 0.5):
    tr = run_protocol(ProtocolConfig(200_000, 5_000, ChannelModel(q), rng_seed=1))
    rate = entropy_bound(tr.stats).bound
    res = extract(tr, ExtractionConfig(margin=0.01, hash_seed=7))
    outcome = f"{res.ell} bits" if not res.aborted else f"aborted ({res.reason})"
    print(
        f"Q={q:<5} P(-|Reflect)={tr.stats.p_minus_acc:.4f} "
        f"rate {rate:.4f} (ideal {closed_form_rate(q):.4f}) -> {outcome} from {tr.raw.size} raw"
    )

# %% [markdown]
# Test rounds are not free: choosing them costs log2(N choose m) seed bits.

# %%
print(f"seed cost: {tr.seed_cost_bits:.0f} bits")
