"""Regenerate the bundled scenario files under src/slicesim/scenarios/."""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "slicesim" / "scenarios"

N_UES = 125
BURST_BYTES = 500 * 10**6          # 500 MB, decimal megabytes = 4000 Mbit
BURST_RATE = 500.0                 # requested by the test UE, Mbit/s
BURST_START = 30.0                 # s, once background traffic saturates the cell
BG_RATE = 4.0                      # per background UE, Mbit/s (124 x 4 ~ 500 Mbit/s offered)
C_SHARED = 339.89                  # 2.71 + 337.18: test + background rates measured with one shared slice
C_PRIORITY = 337.527               # 327.157 + 10.37: test + background rates measured with a priority slice
EPS_PRIORITY = 0.03073             # fitted so that (1-eps)*C = 327.157 and eps*C = 10.37

PRIORITY = {"sst": 1, "sd": 1}
BACKGROUND = {"sst": 1, "sd": 2}
DNN = "internet"


def ue(n, slices):
    return {"ue_id": f"ue-{n:03d}", "subscribed_snssais": slices, "allowed_dnns": [DNN], "subscription_type": 0}


def flows():
    out = [{
        "flow_id": "test-burst",
        "ue_id": "ue-000",
        "dst_address": "198.51.100.10",
        "transport_protocol": "UDP",
        "dst_port": 5201,
        "app_id": "test-traffic",
        "demand": {"type": "finite_burst", "size_bytes": BURST_BYTES,
                   "requested_rate_mbps": BURST_RATE, "start_time_s": BURST_START},
    }]
    for n in range(1, N_UES):
        out.append({
            "flow_id": f"bg-{n:03d}",
            "ue_id": f"ue-{n:03d}",
            "dst_address": f"198.51.100.{11 + n % 10}",
            "transport_protocol": "UDP",
            "dst_port": 5201 + n,
            "app_id": "ota-update",
            "demand": {"type": "constant_rate", "rate_mbps": BG_RATE},
        })
    return out


def background_only_rule():
    return {"rule_precedence": 255, "descriptor": {"match_all": True},
            "rsds": [{"rsd_precedence": 1, "snssai": BACKGROUND, "dnn": DNN}]}


def scenario1():
    return {
        "name": "scenario1-shared-slice",
        "notes": [
            "All 125 UEs share one slice; capacity is split equally among them.",
            "effective_capacity_mbps = 339.89 = 2.71 (test UE) + 337.18 (background aggregate), both measured on the shared slice.",
            "Test UE sends 500e6 bytes at a requested 500 Mbit/s starting at t = 30 s; 124 background UEs send 4 Mbit/s from t = 0.",
        ],
        "clock": {"tick_s": 0.1, "horizon_s": 3000.0},
        "seed": 0,
        "channel": {"effective_capacity_mbps": C_SHARED, "quantum_mbps": None},
        "slices": [{"name": "background", "snssai": BACKGROUND, "priority": 1, "residual_floor": 0.0}],
        "gnb": {"gnb_id": "gnb-1", "supported_snssais": [BACKGROUND]},
        "limits": {"max_sessions": 16},
        "ues": [ue(n, [BACKGROUND]) for n in range(N_UES)],
        "ursp": [{"ue_id": "*", "rules": [background_only_rule()]}],
        "flows": flows(),
    }


def scenario2(eps=EPS_PRIORITY, name="scenario2-priority-slice"):
    notes = [
        "The test UE's traffic is steered by URSP onto a high-priority slice; the other 124 UEs stay on the background slice.",
        "effective_capacity_mbps = 337.527 = 327.157 (test UE) + 10.37 (background aggregate), both measured with the priority slice.",
    ]
    if eps:
        notes.append("residual_floor 0.03073 is a fitted constant: (1 - eps) * 337.527 = 327.157 and eps * 337.527 = 10.37.")
    else:
        notes.append("Idealized strict priority: residual_floor 0, so background receives nothing while the burst is active.")
    ues = [ue(0, [PRIORITY, BACKGROUND])] + [ue(n, [BACKGROUND]) for n in range(1, N_UES)]
    return {
        "name": name,
        "notes": notes,
        "clock": {"tick_s": 0.1, "horizon_s": 300.0},
        "seed": 0,
        "channel": {"effective_capacity_mbps": C_PRIORITY, "quantum_mbps": None},
        "slices": [
            {"name": "high-priority", "snssai": PRIORITY, "priority": 0, "residual_floor": eps},
            {"name": "background", "snssai": BACKGROUND, "priority": 1, "residual_floor": 0.0},
        ],
        "gnb": {"gnb_id": "gnb-1", "supported_snssais": [PRIORITY, BACKGROUND]},
        "limits": {"max_sessions": 16},
        "ues": ues,
        "ursp": [
            {"ue_id": "ue-000", "rules": [
                {"rule_precedence": 10, "descriptor": {"match_app_id": "test-traffic"},
                 "rsds": [{"rsd_precedence": 1, "snssai": PRIORITY, "dnn": DNN, "rat": "NR"},
                          {"rsd_precedence": 2, "snssai": BACKGROUND, "dnn": DNN}]},
                background_only_rule(),
            ]},
            {"ue_id": "*", "rules": [background_only_rule()]},
        ],
        "flows": flows(),
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for fname, doc in [
        ("scenario1.json", scenario1()),
        ("scenario2.json", scenario2()),
        ("scenario2_ideal.json", scenario2(0.0, "scenario2-strict-priority")),
    ]:
        (OUT / fname).write_text(json.dumps(doc, indent=1) + "\n")
        print("wrote", OUT / fname)


if __name__ == "__main__":
    main()
