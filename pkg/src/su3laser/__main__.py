from .sweepcli import main

raise SystemExit(main())
