import json
import sys

d = int(sys.argv[1]) if len(sys.argv) > 1 else 2
print(json.dumps({"d": d, "m": 1}), flush=True)
for line in sys.stdin:
    x = json.loads(line)["x"]
    print(json.dumps({"objective": sum(x), "constraints": [-1.0]}), flush=True)
