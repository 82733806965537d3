from mollify.harness.cli import main

raise SystemExit(main())
