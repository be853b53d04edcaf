import sys

from gauss_stein.main import main

if __name__ == '__main__':
    sys.exit(main())
