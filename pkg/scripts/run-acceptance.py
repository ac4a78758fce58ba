#!/usr/bin/env python3
"""
Acceptance Script

Runs the convergence study and the energy-stability sweep through the
command line, then the slow test studies. Output lands in results/acceptance.
"""

import subprocess
import sys
from pathlib import Path

OUTPUT = Path("results/acceptance")


def run_command(cmd: str, description: str) -> bool:
    """Run a command and return success status."""
    print(f"🔧 {description}...")
    try:
        result = subprocess.run(
            cmd,
            shell=True,
            capture_output=True,
            text=True,
        )

        if result.returncode == 0:
            print(f"✅ {description} completed successfully")
            if result.stdout:
                print(result.stdout)
            return True
        else:
            print(f"❌ {description} failed (exit {result.returncode})")
            if result.stderr:
                print(result.stderr)
            return False

    except Exception as e:
        print(f"❌ Error running {description}: {e}")
        return False


def main():
    """Main acceptance function."""
    print("🧲 Acceptance Runs")
    print("==================")

    if not Path("pyproject.toml").exists():
        print("❌ Run this script from the project root directory")
        sys.exit(1)

    entry = f"{sys.executable} src/main.py"
    commands = [
        (
            f"{entry} converge --levels 4,8,16 --output-dir {OUTPUT}/converge",
            "Convergence study on n = 4, 8, 16",
        ),
    ]
    for dt in ("0.01", "0.1", "1.0"):
        commands.append(
            (
                f"{entry} energy --n 16 --dt {dt} --steps 20 --output-dir {OUTPUT}/energy-{dt}",
                f"Energy stability with dt = {dt}",
            )
        )
    commands.append((f"{sys.executable} -m pytest -m slow --no-cov", "Slow test studies"))

    success = True
    for cmd, description in commands:
        if not run_command(cmd, description):
            success = False

    if success:
        print(f"\n🎉 All acceptance runs passed, results in {OUTPUT}/")
    else:
        print("\n❌ Acceptance runs completed with failures")
        sys.exit(1)


if __name__ == "__main__":
    main()
