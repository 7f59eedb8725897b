import json
import sys
import time

print(json.dumps({"d": 2, "m": 1}), flush=True)
for line in sys.stdin:
    time.sleep(30)
