package controllers

import (
	"context"

	corev1 "k8s.io/api/core/v1"
	"k8s.io/apimachinery/pkg/types"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// AppReconciler re-reads the shared config recorded in status.
type AppReconciler struct {
	client.Client
}

// Reconcile fetches the ConfigMap recorded in the App status.
func (r *AppReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	app := &App{}
	if err := r.Get(ctx, req.NamespacedName, app); err != nil {
		return ctrl.Result{}, err
	}
	if app.Status.ObservedConfigNamespace == "" {
		return ctrl.Result{}, nil
	}

	key := types.NamespacedName{
		Namespace: app.Status.ObservedConfigNamespace,
		Name:      "shared-config",
	}
	cm := &corev1.ConfigMap{}
	if err := r.Get(ctx, key, cm); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, nil
}
