"""Fan three corpus tools out over a directory of inputs and print per-task timings."""

import argparse
import os
import time

from cwlforge import CORPUS, Engine, RunnerConfig, load_tool, wait


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("inputs", nargs="+", help="input files")
    ap.add_argument("--executor", default="thread-pool")
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--delay", type=float, default=0.1)
    args = ap.parse_args()

    cfg = RunnerConfig(executor=args.executor, workers=args.workers)
    with Engine(cfg) as engine:
        resize = load_tool(CORPUS / "resize_image.cwl", engine)
        filt = load_tool(CORPUS / "filter_image.cwl", engine)
        blur = load_tool(CORPUS / "blur_image.cwl", engine)
        t0 = time.monotonic()
        rows = []
        for path in args.inputs:
            h1 = resize(input_image=os.path.abspath(path), size=4096, delay=args.delay)
            h2 = filt(input_image=h1.outputs[0], sepia=True, delay=args.delay)
            h3 = blur(input_image=h2.outputs[0], radius=5, delay=args.delay)
            rows.append((path, (h1, h2, h3)))
        wait([hs[-1] for _, hs in rows], "all")
        for path, hs in rows:
            spans = " ".join(
                f"{h.task_id}:{h.started_at - t0:.2f}-{h.finished_at - t0:.2f}" if h.started_at else f"{h.task_id}:{h.state}"
                for h in hs
            )
            final = hs[-1].output_object if hs[-1].state == "succeeded" else hs[-1].error
            print(f"{path}  {spans}  {final}")
        print(f"makespan {time.monotonic() - t0:.2f}s")


if __name__ == "__main__":
    main()
