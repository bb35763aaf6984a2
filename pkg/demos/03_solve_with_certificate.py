"""Solve a model file to a requested precision and read the certificate.

The classic two-door tiger problem: listening costs a little and is noisy,
opening the wrong door is catastrophic. The solver stops once the gap
between its bounds at the initial belief is below epsilon, which certifies
the returned policy loses at most epsilon against the optimum.
"""

import io

from hsvi import SolverConfig, parse_pomdp, solve

TIGER = """
# two doors, one tiger
discount: 0.95
values: reward
states: tiger-left tiger-right
actions: listen open-left open-right
observations: hear-left hear-right
start: uniform
T: listen
identity
T: open-left
uniform
T: open-right
uniform
O: listen : tiger-left
0.85 0.15
O: listen : tiger-right
0.15 0.85
O: open-left
uniform
O: open-right
uniform
R: listen : * : * : * -1
R: open-left : tiger-left : * : * -100
R: open-left : tiger-right : * : * 10
R: open-right : tiger-left : * : * 10
R: open-right : tiger-right : * : * -100
"""

model = parse_pomdp(TIGER)
print(model)

result = solve(model, SolverConfig(epsilon=0.01))
trace = result.trace
print(f"\nstatus: {result.terminated_by} after {trace.trial[-1]} trials, "
      f"{result.total_updates} local updates")
print(f"value of acting optimally from the uniform belief: "
      f"[{trace.lower_b0[-1]:.4f}, {trace.upper_b0[-1]:.4f}]")
print(f"certificate: executing the greedy policy on the lower bound loses at "
      f"most {result.final_width:.4f}")

print("\nhow the interval closed (every tenth trial):")
scale = 50.0 / trace.width[0]
for i in list(range(0, len(trace), 10)) + [len(trace) - 1]:
    bar = "#" * max(1, int(scale * trace.width[i]))
    print(f"  trial {trace.trial[i]:>3}: width {trace.width[i]:9.4f} {bar}")

print("\ntrace as CSV (what the command line writes with --trace):")
sink = io.StringIO()
trace.write_csv(sink)
print("\n".join(sink.getvalue().splitlines()[:5] + ["..."]))
