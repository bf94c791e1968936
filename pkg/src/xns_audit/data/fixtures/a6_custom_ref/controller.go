package controllers

import (
	"context"

	"k8s.io/apimachinery/pkg/types"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// AppReconciler binds an App to a Database.
type AppReconciler struct {
	client.Client
}

// Reconcile looks up the Database named in the App spec.
func (r *AppReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	app := &App{}
	if err := r.Get(ctx, req.NamespacedName, app); err != nil {
		return ctrl.Result{}, err
	}

	var key types.NamespacedName
	key.Name = app.Spec.Database.Name
	key.Namespace = app.Spec.Database.Namespace

	db := &Database{}
	if err := r.Get(ctx, key, db); err != nil {
		return ctrl.Result{}, err
	}
	if db.Spec.DSN == "" {
		return ctrl.Result{Requeue: true}, nil
	}
	return ctrl.Result{}, nil
}
