# Demo: Tracking with variable, time-dependent coefficients
#
#   y_t - (a y_x)_x + b y_x + c y = 0,
#   a = 1 + 0.15 cos(pi x),  b = 0.1 sin(pi x),  c = 0.3 (1 + t)
#
# run through the experiment layer, which writes the result files (time series
# CSV, configuration echo, JSON summary and two charts) under ./results.
from tracking_control.experiments import example_config, run_tracking


config = example_config(3).with_overrides(elements=100, steps=250, plot=True)
print(config.to_json())

summary = run_tracking(config)
print(f"E_3 = {summary.errors[0]:.6e}, {summary.iterations} iterations ({summary.reason})")
for name, path in summary.artifacts.items():
    print(f"{name}: {path}")
