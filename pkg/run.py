#!/usr/bin/env python3
"""
Minimal-Graph Brownian Motion Laboratory
Startup Script

This script builds the application and serves the HTTP API.
"""

import os
import sys

from app import create_app
from utils.export_service import export_service


def main():
    """Main function to run the API server"""
    app = create_app()

    print("=" * 80)
    print(f"{app.config['APP_NAME']} {app.config['APP_VERSION']} - {app.config['APP_DESCRIPTION']}")
    print("=" * 80)
    print()
    print("Configuration:")
    print(f"  workers:     {app.config['WORKERS']}")
    print(f"  chunk size:  {app.config['CHUNK_SIZE']}")
    print(f"  output dir:  {app.config['OUTPUT_DIR']}")
    print()

    print("Creating directories...")
    try:
        os.makedirs(app.config['OUTPUT_DIR'], exist_ok=True)
        print("✓ Directories created successfully")
    except Exception as e:
        print(f"✗ Error creating directories: {e}")
        sys.exit(1)

    removed = export_service.cleanup_old_exports()
    print(f"✓ Removed {removed} run(s) older than {app.config['EXPORT_RETENTION_DAYS']} days")

    port = int(os.environ.get('MBM_PORT', 5000))
    print()
    print(f"Serving the API at: http://localhost:{port}/api/health")
    print("Press Ctrl+C to stop the server")
    print("-" * 80)

    try:
        app.run(debug=app.config.get('DEBUG', False), host='0.0.0.0', port=port)
    except KeyboardInterrupt:
        print("\nServer stopped by user")
    except Exception as e:
        print(f"Error running server: {e}")
        sys.exit(1)


if __name__ == '__main__':
    main()
