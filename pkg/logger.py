#!/usr/bin/env python3

"""

📝 ЛОГИРОВАНИЕ С ЦВЕТАМИ И СМАЙЛИКАМИ

Консоль пишет в stderr: stdout занят отчётом о запуске.
Каждая запись помечается меткой текущей задачи (problem_context),
предупреждения numpy (RuntimeWarning) попадают в тот же журнал.

"""

import contextlib
import contextvars
import logging
import sys
from config import LOG_LEVEL, LOG_FORMAT, LOG_TIME_FORMAT, LOG_FILE, LOG_TO_FILE

_problem_label: contextvars.ContextVar[str] = contextvars.ContextVar("problem_label", default="-")


class _ProblemFilter(logging.Filter):
    """Добавляет record.problem для форматов с %(problem)s"""

    def filter(self, record):
        record.problem = _problem_label.get()
        return True


class _ColoredFormatter(logging.Formatter):
    """Цвет и смайлик по уровню, метка задачи в квадратных скобках"""

    COLORS = {
        'DEBUG': '\033[36m',      # Голубой
        'INFO': '\033[92m',       # Зелёный
        'WARNING': '\033[93m',    # Жёлтый
        'ERROR': '\033[91m',      # Красный
        'CRITICAL': '\033[41m',   # Красный фон
        'RESET': '\033[0m',
    }

    EMOJIS = {
        'DEBUG': '🔍',
        'INFO': '✅',
        'WARNING': '⚠️',
        'ERROR': '❌',
        'CRITICAL': '🚨',
    }

    def __init__(self, use_color: bool):
        super().__init__()
        self.use_color = use_color

    def format(self, record):
        message = record.getMessage()
        # сообщения уже начинаются со своего смайлика
        if not message[:1].isascii() or message[:1] in "━═":
            prefix = ""
        else:
            prefix = self.EMOJIS.get(record.levelname, '•') + " "
        asctime = self.formatTime(record, "%H:%M:%S")
        problem = getattr(record, "problem", "-")
        tag = "" if problem == "-" else f"[{problem}] "

        formatted = f"[{asctime}] {tag}{prefix}{message}"
        if record.exc_info:
            formatted += "\n" + self.formatException(record.exc_info)
        if self.use_color:
            formatted = f"{self.COLORS.get(record.levelname, '')}{formatted}{self.COLORS['RESET']}"
        return formatted


def _configure_root() -> None:
    root_logger = logging.getLogger()
    if any(getattr(h, "_saddle_handler", False) for h in root_logger.handlers):
        return
    root_logger.setLevel(LOG_LEVEL)

    # Файл: чистый текст без цветов
    if LOG_TO_FILE:
        file_handler = logging.FileHandler(LOG_FILE, encoding='utf-8')
        file_handler.setLevel(LOG_LEVEL)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT, LOG_TIME_FORMAT))
        file_handler.addFilter(_ProblemFilter())
        file_handler._saddle_handler = True
        root_logger.addHandler(file_handler)

    # Консоль: цвета только для терминала
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(LOG_LEVEL)
    console_handler.setFormatter(_ColoredFormatter(use_color=sys.stderr.isatty()))
    console_handler.addFilter(_ProblemFilter())
    console_handler._saddle_handler = True
    root_logger.addHandler(console_handler)

    logging.captureWarnings(True)


_configure_root()


def get_logger(name: str) -> logging.Logger:
    """Получить логгер для модуля"""
    return logging.getLogger(name)


@contextlib.contextmanager
def problem_context(label: str):
    """Помечает все записи внутри блока меткой задачи"""
    token = _problem_label.set(label or "-")
    try:
        yield
    finally:
        _problem_label.reset(token)
