#!/usr/bin/env python
import os
import sys
import logging

import pytest

from vlsnull.cli import setup_logging

if __name__ == '__main__':
    # Show output results from every test function
    # Show the message output for skipped and expected failures
    args = ['-v', '-vrxs', os.path.join(os.path.dirname(__file__),
                                        'vlsnull', 'tests')]

    # Add extra arguments
    if len(sys.argv) > 1:
        args.extend(sys.argv[1:])

    txt = 'pytest arguments: {}'.format(args)
    print(txt)

    # Full debug output of every run goes to a rotating log next to this file
    setup_logging(log_file=os.path.join(os.path.dirname(__file__),
                                        'debug.log'))

    logger = logging.getLogger(__name__)
    logger.info(txt)

    sys.exit(pytest.main(args))
