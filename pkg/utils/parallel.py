from concurrent.futures import ThreadPoolExecutor

from config import Config


def ordered_map(fn, items, threads=None):
    """
    Maps ``fn`` over ``items`` and returns results in input order.
    Exceptions propagate from the first failing item in input order.
    """
    items = list(items)
    threads = Config.THREADS if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
