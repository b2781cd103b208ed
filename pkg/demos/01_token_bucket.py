"""
Token bucket filtering with run-length accounting
=================================================

A bucket of 20 tokens refilled at 2 tokens/s admits a burst of 20 alerts
at once and then settles to two per second.  Everything over the limit is
counted, not lost: the count rides along with the next admitted alert.
"""

from alertgate import Alert, Throttle

# one filter with the defaults used throughout the package
throttle = Throttle(rate=2, capacity=20, start_ts=0.0)


def alert(i, ts):
    return Alert(i, ts, "icmp-flood", "192.0.2.66", "10.0.0.5")


# 25 identical alerts arrive at the same instant
verdicts = [throttle.submit(alert(i, 0.0)) for i in range(25)]
print("burst at t=0:", [v.kind for v in verdicts].count("admitted"), "admitted,",
      [v.kind for v in verdicts].count("suppressed"), "suppressed")

# one second later two tokens have accumulated; the next alert releases the run
v = throttle.submit(alert(25, 1.0))
print("t=1:", v.kind, "->", v.backlog.message)

# a sustained flood: 7343 alerts/s for ten seconds
admitted = sum(throttle.submit(alert(26 + i, 1.0 + i / 7343)).admitted for i in range(73430))
print(f"10 s flood: {admitted} of 73430 admitted")
print("end of stream:", throttle.flush().message)
