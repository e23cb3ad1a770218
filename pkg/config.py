#!/usr/bin/env python3

"""
🔧 config.py - КОНФИГ РЕШАТЕЛЯ С .env
Допуски SDP, иерархия релаксаций, внешний цикл седловых точек
"""

import os
import sys
import json
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 📂 PATHS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

PROJECT_ROOT = Path(__file__).parent
LOGS_PATH = Path(os.getenv("LOGS_PATH", str(PROJECT_ROOT / "logs")))
PROBLEMS_PATH = PROJECT_ROOT / "problems"

# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🧮 SDP SOLVER - ДИНАМИЧЕСКИЙ КОНФИГ ИЗ .env
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def _parse_json_config(env_var: str, default: dict) -> dict:
    """Парсить JSON конфиг из .env поверх дефолта"""
    value = os.getenv(env_var)
    if not value:
        return default
    try:
        value = value.strip().strip("'\"")
        parsed = json.loads(value)
        return {**default, **parsed}
    except json.JSONDecodeError as e:
        print(f"⚠️ Ошибка парсинга {env_var}: {e}, используется дефолт", file=sys.stderr)
        return default


_DEFAULT_SDP = {
    "tol": float(os.getenv("SDP_TOL", "1e-8")),
    "cert_tol": float(os.getenv("SDP_CERT_TOL", "1e-8")),
    "max_iters": int(os.getenv("SDP_MAX_ITERS", "200")),
    "step": float(os.getenv("SDP_STEP", "0.99")),
    "presolve_tol": float(os.getenv("SDP_PRESOLVE_TOL", "1e-10")),
    "accept_tol": float(os.getenv("SDP_ACCEPT_TOL", "1e-6")),
}

# ДИНАМИЧЕСКИЙ конфиг (SDP_OPTIONS='{"tol": 1e-7}' в .env)
SDP_OPTIONS = _parse_json_config("SDP_OPTIONS", _DEFAULT_SDP)

SDP_TOL = float(SDP_OPTIONS["tol"])
SDP_CERT_TOL = float(SDP_OPTIONS["cert_tol"])
SDP_MAX_ITERS = int(SDP_OPTIONS["max_iters"])
SDP_STEP = float(SDP_OPTIONS["step"])
SDP_PRESOLVE_TOL = float(SDP_OPTIONS["presolve_tol"])
# Остановившийся решатель с невязками ниже порога годится для извлечения точек
SDP_ACCEPT_TOL = float(SDP_OPTIONS["accept_tol"])

# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 📐 ИЕРАРХИЯ РЕЛАКСАЦИЙ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

RANK_TOL = float(os.getenv("RANK_TOL", "1e-6"))
TOL_FEAS = float(os.getenv("TOL_FEAS", "1e-6"))
ORDER_SLACK = int(os.getenv("ORDER_SLACK", "3"))
DEDUP_TOL = float(os.getenv("DEDUP_TOL", "1e-6"))

# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🎯 СЕДЛОВЫЕ ТОЧКИ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

TOL_MATCH = float(os.getenv("TOL_MATCH", "1e-5"))
MAX_OUTER_ITERS = int(os.getenv("MAX_OUTER_ITERS", "50"))
SAMPLE_COUNT = int(os.getenv("SAMPLE_COUNT", "5000"))
NONSINGULAR_TRIALS = int(os.getenv("NONSINGULAR_TRIALS", "20"))
SEED = int(os.getenv("SEED", "0"))
DISPLAY_DIGITS = int(os.getenv("DISPLAY_DIGITS", "4"))

# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 📊 LOGGING
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(problem)s - %(name)s - %(levelname)s - %(message)s"
LOG_TIME_FORMAT = "%Y-%m-%d %H:%M:%S"
LOG_TO_FILE = os.getenv("LOG_TO_FILE", "true").lower() == "true"
LOG_FILE = LOGS_PATH / "saddle.log"

if LOG_TO_FILE:
    LOGS_PATH.mkdir(parents=True, exist_ok=True)

# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# ⏱️ CONCURRENCY
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

MAX_WORKERS = int(os.getenv("MAX_WORKERS", "2"))

# ═══════════════════════════════════════════════════════════════════════
# 🎨 ФУНКЦИИ ДЛЯ ВЫВОДА КОНФИГА
# ═══════════════════════════════════════════════════════════════════════

def print_config():
    """Вывести конфиг при старте (в stderr, stdout занят отчётом)"""
    out = sys.stderr
    print("\n" + "=" * 70, file=out)
    print("🧮 SADDLE POINT SOLVER - КОНФИГУРАЦИЯ", file=out)
    print("=" * 70, file=out)
    print(f"📐 SDP: tol={SDP_TOL:g}, cert_tol={SDP_CERT_TOL:g}, max_iters={SDP_MAX_ITERS}", file=out)
    print(f"🔍 Ранг: rank_tol={RANK_TOL:g}, tol_feas={TOL_FEAS:g}, запас порядков={ORDER_SLACK}", file=out)
    print(f"🎯 Седло: tol_match={TOL_MATCH:g}, max_outer_iters={MAX_OUTER_ITERS}, seed={SEED}", file=out)
    print(f"🎲 Проверка: {SAMPLE_COUNT} случайных точек на множество", file=out)
    print(f"📝 Лог: level={LOG_LEVEL}, файл={'✅ ' + str(LOG_FILE) if LOG_TO_FILE else '❌'}", file=out)
    print("=" * 70 + "\n", file=out)
