import logging


root_logger = None


def setup(level=logging.WARN):
    global root_logger
    logger = logging.getLogger()
    logger.setLevel(level)

    if root_logger is None:
        # create console handler
        ch = logging.StreamHandler()
        ch.setLevel(logging.DEBUG)

        # create formatter
        formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

        # add formatter to ch
        ch.setFormatter(formatter)

        # add ch to logger
        logger.addHandler(ch)
        root_logger = logger
    return logger


def get_logger(name, level=logging.INFO):
    if root_logger is None:
        setup()

    logger = logging.getLogger(name)
    logger.setLevel(level)

    return logger
