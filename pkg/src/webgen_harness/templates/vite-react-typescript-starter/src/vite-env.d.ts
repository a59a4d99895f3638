/// <reference types="vite/client" />