from vano.main import main

raise SystemExit(main())
